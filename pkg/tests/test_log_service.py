import json

from ccdist.config import settings
from ccdist.services.log_service import LogLevel, LogService, LogType


def test_entries_are_numbered():
    service = LogService(max_history=10)
    first = service.log(LogLevel.INFO, LogType.SOLVER, "first", details={"iterations": 3})
    second = service.log(LogLevel.ERROR, LogType.ORACLE, "second")
    assert (first.seq, second.seq) == (1, 2)
    assert first.to_dict()["details"] == {"iterations": 3}
    assert json.loads(second.to_json())["type"] == "oracle"


def test_summary_covers_events_after_mark():
    service = LogService(max_history=10)
    service.log(LogLevel.WARNING, LogType.SYSTEM, "before the mark")
    mark = service.mark()
    service.log(LogLevel.SUCCESS, LogType.SOLVER, "converged")
    service.log(LogLevel.WARNING, LogType.CLASSIFY, "relations violated")
    service.log(LogLevel.ERROR, LogType.SOLVER, "diverged")

    summary = service.summary(mark)
    assert summary["events"] == 3
    assert summary["levels"] == {"error": 1, "success": 1, "warning": 1}
    assert summary["types"] == {"classify": 1, "solver": 2}
    assert summary["warnings"] == ["relations violated", "diverged"]


def test_counts_survive_bounded_history():
    service = LogService(max_history=3)
    mark = service.mark()
    for k in range(5):
        service.log(LogLevel.DEBUG, LogType.SYSTEM, f"event {k}")
    assert [e.message for e in service.events_since(mark)] == ["event 2", "event 3", "event 4"]
    assert service.summary(mark)["events"] == 5
    assert service.summary(mark)["levels"] == {"debug": 5}


def test_events_since_filters_levels():
    service = LogService(max_history=10)
    mark = service.mark()
    service.log(LogLevel.INFO, LogType.PROBE, "1 distinct solution(s)")
    service.log(LogLevel.WARNING, LogType.SOLVER, "outside")
    assert [e.message for e in service.events_since(mark, levels=[LogLevel.WARNING])] == [
        "outside"
    ]
    service.clear_history()
    assert service.events_since(mark) == []


def test_echo_to_stderr(capsys):
    service = LogService(max_history=10)
    service.echo = True
    service.log(LogLevel.ERROR, LogType.SOLVER, "diverged")
    assert "[ERROR] [solver] diverged" in capsys.readouterr().err


def test_file_logging(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "enable_file_logging", True)
    monkeypatch.setattr(settings, "log_file_path", str(tmp_path))
    service = LogService(max_history=10)
    service.log(LogLevel.INFO, LogType.FIXTURE, "fixture written", details={"b": 1.2})
    service.log(LogLevel.ERROR, LogType.ERROR, "failure")
    for logger in (service.file_logger, service.json_logger):
        for handler in logger.handlers:
            handler.flush()

    text = (tmp_path / "ccdist.log").read_text(encoding="utf-8")
    assert "[fixture] fixture written" in text
    assert "failure" in (tmp_path / "error.log").read_text(encoding="utf-8")
    lines = (tmp_path / "ccdist.jsonl").read_text(encoding="utf-8").splitlines()
    assert json.loads(lines[0])["details"] == {"b": 1.2}
    assert "fixture" not in (tmp_path / "error.jsonl").read_text(encoding="utf-8")

    for logger in (service.file_logger, service.json_logger):
        for handler in list(logger.handlers):
            handler.close()
            logger.removeHandler(handler)
