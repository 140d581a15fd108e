"""
Process-level settings for rydberg_rbm

Values come from environment variables (optionally a .env file):

    RYDBERG_MAX_PURE_SITES    cap for dense state vectors / Hamiltonians (16)
    RYDBERG_MAX_MIXED_SITES   cap for dense density matrices (8)
    RYDBERG_MAX_ENUM_SITES    cap for exact RBM enumeration (20)
    RYDBERG_MEMORY_BUDGET_GB  byte budget for dense matrices, 0 disables (0)
    RYDBERG_ANGULAR_UNITS     multiply MHz by 2*pi in time evolution (true)
    RYDBERG_THREADS           worker processes, 0 = os.cpu_count() (0)
    RYDBERG_LOG_LEVEL         root log level for entry points (INFO)
"""

import os
import logging
from dataclasses import dataclass

from dotenv import load_dotenv

from rydberg_rbm.exceptions import ResourceLimitError

load_dotenv()

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Settings:
    max_pure_sites: int = 16
    max_mixed_sites: int = 8
    max_enum_sites: int = 20
    memory_budget_gb: float = 0.0
    angular_units: bool = True
    threads: int = 0
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Settings":
        """Read settings from the current environment"""
        try:
            return cls(
                max_pure_sites=int(os.getenv("RYDBERG_MAX_PURE_SITES", "16")),
                max_mixed_sites=int(os.getenv("RYDBERG_MAX_MIXED_SITES", "8")),
                max_enum_sites=int(os.getenv("RYDBERG_MAX_ENUM_SITES", "20")),
                memory_budget_gb=float(os.getenv("RYDBERG_MEMORY_BUDGET_GB", "0")),
                angular_units=os.getenv("RYDBERG_ANGULAR_UNITS", "true").lower() == "true",
                threads=int(os.getenv("RYDBERG_THREADS", "0")),
                log_level=os.getenv("RYDBERG_LOG_LEVEL", "INFO").upper(),
            )
        except ValueError as e:
            raise ValueError(f"Invalid RYDBERG_* environment setting: {e}") from e

    def resolved_threads(self, requested: int = 0) -> int:
        """Worker count: explicit request, else setting, else CPU count"""
        n = requested or self.threads or (os.cpu_count() or 1)
        return max(1, int(n))


def get_settings() -> Settings:
    """Current settings (re-read on every call so tests can patch the environment)"""
    return Settings.from_env()


def _check_budget(n_bytes: int, what: str, settings: Settings) -> None:
    if settings.memory_budget_gb > 0 and n_bytes > settings.memory_budget_gb * 1024**3:
        raise ResourceLimitError(
            f"{what} needs {n_bytes / 1024**3:.2f} GB, "
            f"budget is {settings.memory_budget_gb:.2f} GB (RYDBERG_MEMORY_BUDGET_GB)"
        )


def require_pure_sites(n_sites: int, what: str = "dense operator") -> None:
    """Raise ResourceLimitError if a 2^N x 2^N real matrix is too large"""
    settings = get_settings()
    if n_sites > settings.max_pure_sites:
        raise ResourceLimitError(
            f"{what} with N={n_sites} exceeds cap N<={settings.max_pure_sites} "
            f"(RYDBERG_MAX_PURE_SITES)"
        )
    _check_budget(8 * 4**n_sites, what, settings)


def require_mixed_sites(n_sites: int, what: str = "density matrix") -> None:
    """Raise ResourceLimitError if a complex 2^N x 2^N matrix is too large"""
    settings = get_settings()
    if n_sites > settings.max_mixed_sites:
        raise ResourceLimitError(
            f"{what} with N={n_sites} exceeds cap N<={settings.max_mixed_sites} "
            f"(RYDBERG_MAX_MIXED_SITES)"
        )
    _check_budget(16 * 4**n_sites, what, settings)


def require_enum_sites(n_sites: int, what: str = "exact enumeration") -> None:
    """Raise ResourceLimitError if 2^N configurations cannot be enumerated"""
    settings = get_settings()
    if n_sites > settings.max_enum_sites:
        raise ResourceLimitError(
            f"{what} with N={n_sites} exceeds cap N<={settings.max_enum_sites} "
            f"(RYDBERG_MAX_ENUM_SITES)"
        )
