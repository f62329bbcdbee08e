import os
from pathlib import Path
from dataclasses import dataclass

from dotenv import load_dotenv

from .errors import ConfigError


MAX_DEFAULT_WORKERS = 8
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass
class Config:
    data_dir: Path
    workers: int
    log_level: str = "INFO"

    @property
    def db_path(self) -> Path:
        return self.data_dir / "runs.db"


def _default_workers() -> int:
    return max(1, min(os.cpu_count() or 1, MAX_DEFAULT_WORKERS))


def load_config() -> Config:
    current = Path(__file__).parent.parent
    env_path = current / ".env"

    if env_path.exists():
        load_dotenv(env_path)
    else:
        load_dotenv()

    workers = os.getenv("DRM_OPT_WORKERS", "").strip().strip('"').strip("'")
    if workers:
        try:
            workers = int(workers)
        except ValueError:
            raise ConfigError("DRM_OPT_WORKERS", "must be an integer", workers) from None
        if workers < 1:
            raise ConfigError("DRM_OPT_WORKERS", "must be at least 1", str(workers))
    else:
        workers = _default_workers()

    log_level = os.getenv("DRM_OPT_LOG_LEVEL", "INFO").strip().upper()
    if log_level not in LOG_LEVELS:
        raise ConfigError("DRM_OPT_LOG_LEVEL", f"must be one of {', '.join(LOG_LEVELS)}", log_level)

    data_dir = Path(os.getenv("DATA_DIR", current / "data"))
    data_dir.mkdir(parents=True, exist_ok=True)

    return Config(data_dir=data_dir, workers=workers, log_level=log_level)
