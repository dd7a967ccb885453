from ccdist.cli import main

raise SystemExit(main())
