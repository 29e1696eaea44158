# otto_engine/runtime_manager.py
import logging
import os
import sys
from importlib import metadata
from typing import Dict, Optional

from dotenv import load_dotenv

from otto_engine.common.engine_instance.engine_services.cache_manager.cell_cache import REDIS_URL_ENV
from otto_engine.common.engine_instance.local_shared_model.settings_model import EngineSettings

log = logging.getLogger("RUNTIME")

LOG_LEVEL_ENV = "OTTO_LOG_LEVEL"
LOG_FORMAT = "[%(name)s] %(message)s"

_STACK = ("numpy", "scipy", "pandas", "pydantic", "tqdm", "python-dotenv", "redis")


def init_runtime(env_file: Optional[str] = None) -> EngineSettings:
    """
    Load `.env`, install the `[TAG] message` log format and read the numerical settings.
    Existing environment variables win over the file.
    """
    load_dotenv(env_file)
    level = os.getenv(LOG_LEVEL_ENV, "INFO").upper()
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)
    return EngineSettings.from_env()


def check_runtime_status() -> Dict[str, str]:
    """Log a readiness report: interpreter, package versions and the cache backend."""
    report = {"python": f"{sys.version_info.major}.{sys.version_info.minor}", "cwd": os.getcwd()}
    for package in _STACK:
        try:
            report[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            report[package] = "MISSING"
    report["cache"] = "redis" if os.getenv(REDIS_URL_ENV) else "memory"

    log.info("=== Runtime Status ===")
    for key, value in report.items():
        log.info(f"{key}: {value}")
    return report
