"""
求解日誌服務
每條事件帶遞增序號；CLI 在運行前取 mark，
結束後把該次運行的事件摘要寫入報告 provenance。
可選文件持久化（每日輪換，文本 / JSON 行）
"""

import json
import logging
import logging.handlers
import sys
import threading
from collections import Counter, deque
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Deque, Dict, Iterable, List, Optional

from ccdist.config import settings

LOG_NAME = "ccdist"

# 摘要中最多保留的警告 / 錯誤訊息條數
SUMMARY_MESSAGES = 20


class LogLevel(str, Enum):
    """日誌級別"""
    DEBUG = "debug"
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    SUCCESS = "success"


class LogType(str, Enum):
    """日誌類型"""
    SOLVER = "solver"          # 五體梯形 Newton 求解
    CLASSIFY = "classify"      # 分類與對稱分析
    COLLINEAR = "collinear"    # 共線構型 / Moulton 枚舉
    ORACLE = "oracle"          # 位置空間交叉驗證
    FUZZ = "fuzz"              # 恆等式模糊測試
    PROBE = "probe"            # 唯一性探測
    FIXTURE = "fixture"        # 基準數據生成
    CLI = "cli"                # 命令行
    SYSTEM = "system"          # 系統事件
    ERROR = "error"            # 錯誤事件


STDLIB_LEVELS = {
    LogLevel.DEBUG: logging.DEBUG,
    LogLevel.INFO: logging.INFO,
    LogLevel.SUCCESS: logging.INFO,
    LogLevel.WARNING: logging.WARNING,
    LogLevel.ERROR: logging.ERROR,
}


@dataclass
class LogEntry:
    """日誌條目"""
    seq: int
    level: LogLevel
    log_type: LogType
    message: str
    details: Dict[str, Any] = field(default_factory=dict)
    duration_ms: Optional[float] = None
    timestamp: datetime = field(default_factory=datetime.now)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp.isoformat(),
            "level": self.level.value,
            "type": self.log_type.value,
            "message": self.message,
            "details": self.details,
            "duration_ms": self.duration_ms,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, default=str)


@dataclass(frozen=True)
class LogMark:
    """某一時刻的序號與累計計數"""
    seq: int
    levels: Counter
    types: Counter


class LogService:
    """日誌服務（內存 + 文件持久化）"""

    def __init__(self, max_history: Optional[int] = None):
        self.history: Deque[LogEntry] = deque(maxlen=max_history or settings.log_history_size)
        self.echo = settings.log_echo
        self._lock = threading.Lock()
        self._seq = 0
        # 累計計數不受 history 長度限制
        self._level_counts: Counter = Counter()
        self._type_counts: Counter = Counter()

        self.log_dir: Optional[Path] = None
        self.file_logger: Optional[logging.Logger] = None
        self.json_logger: Optional[logging.Logger] = None
        if settings.enable_file_logging:
            self._setup_file_logging(Path(settings.log_file_path))

    def _setup_file_logging(self, log_dir: Path):
        """文本與 JSON 行兩組 handler，各自一個全量文件和一個 error 文件"""
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            print(f"Failed to setup file logging: {e}", file=sys.stderr)
            return
        self.log_dir = log_dir

        if settings.enable_text_file_logging:
            self.file_logger = self._file_logger(
                "ccdist.file",
                "log",
                logging.Formatter(
                    "[%(asctime)s] [%(levelname)s] [%(log_type)s] %(message)s | %(details)s",
                    datefmt="%Y-%m-%d %H:%M:%S",
                ),
            )
        if settings.enable_json_file_logging:
            self.json_logger = self._file_logger(
                "ccdist.jsonl", "jsonl", logging.Formatter("%(message)s")
            )

    def _file_logger(
        self, name: str, suffix: str, formatter: logging.Formatter
    ) -> logging.Logger:
        target = logging.getLogger(name)
        target.setLevel(logging.DEBUG)
        target.propagate = False
        target.handlers.clear()
        for stem, level in ((LOG_NAME, logging.DEBUG), ("error", logging.ERROR)):
            handler = logging.handlers.TimedRotatingFileHandler(
                filename=str(self.log_dir / f"{stem}.{suffix}"),
                when="midnight",
                backupCount=settings.log_retention_days,
                encoding="utf-8",
            )
            handler.setLevel(level)
            handler.setFormatter(formatter)
            target.addHandler(handler)
        return target

    def _persist(self, entry: LogEntry):
        level = STDLIB_LEVELS[entry.level]
        if self.file_logger is not None:
            self.file_logger.log(
                level,
                entry.message,
                extra={
                    "log_type": entry.log_type.value,
                    "details": json.dumps(entry.details, ensure_ascii=False, default=str),
                },
            )
        if self.json_logger is not None:
            self.json_logger.log(level, entry.to_json())

    def log(
        self,
        level: LogLevel,
        log_type: LogType,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        duration_ms: Optional[float] = None,
    ) -> LogEntry:
        """記錄一條事件（內存 + 文件 + 可選 stderr）"""
        with self._lock:
            self._seq += 1
            entry = LogEntry(self._seq, level, log_type, message, details or {}, duration_ms)
            self.history.append(entry)
            self._level_counts[level.value] += 1
            self._type_counts[log_type.value] += 1

        self._persist(entry)
        if self.echo:
            print(f"[{level.value.upper()}] [{log_type.value}] {message}", file=sys.stderr)
        return entry

    def mark(self) -> LogMark:
        with self._lock:
            return LogMark(self._seq, Counter(self._level_counts), Counter(self._type_counts))

    def events_since(
        self, mark: LogMark, levels: Optional[Iterable[LogLevel]] = None
    ) -> List[LogEntry]:
        """mark 之後仍留在 history 中的事件，按時間順序"""
        wanted = set(levels) if levels else None
        with self._lock:
            entries = list(self.history)
        return [
            e for e in entries if e.seq > mark.seq and (wanted is None or e.level in wanted)
        ]

    def summary(self, mark: LogMark) -> Dict[str, Any]:
        """
        mark 之後的事件摘要，寫入報告 provenance

        Returns:
            events: 事件總數
            levels / types: 非零計數
            warnings: 前 SUMMARY_MESSAGES 條 WARNING / ERROR 訊息
        """
        now = self.mark()
        levels = now.levels - mark.levels
        types = now.types - mark.types
        flagged = self.events_since(mark, levels=(LogLevel.WARNING, LogLevel.ERROR))
        return {
            "events": now.seq - mark.seq,
            "levels": dict(sorted(levels.items())),
            "types": dict(sorted(types.items())),
            "warnings": [e.message for e in flagged[:SUMMARY_MESSAGES]],
        }

    def clear_history(self):
        with self._lock:
            self.history.clear()


# 全局單例
log_service = LogService()
