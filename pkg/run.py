#!/usr/bin/env python3
"""运行脚本"""
import sys

from ccdist.cli import main

if __name__ == "__main__":
    # --debug: 同步把日誌事件輸出到 stderr
    argv = sys.argv[1:]
    if "--debug" in argv:
        argv = [a for a in argv if a != "--debug"] + ["--verbose"]
        print("🐛 Debug mode enabled - solver events will be echoed", file=sys.stderr)

    sys.exit(main(argv))
