"""Platform-specific utilities for the CAPFI toolkit."""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from platformdirs import PlatformDirs


@dataclass
class AppPaths:
    """Container for toolkit paths."""

    log_dir: Path


def get_app_paths(log_dir: Optional[Path] = None) -> AppPaths:
    """Get OS-appropriate toolkit directories.

    Args:
        log_dir: Explicit log directory; overrides the platform default.

    Returns:
        AppPaths: Container with directory paths.
    """
    dirs = PlatformDirs(appname="capfi", appauthor=False)
    candidates: list[Path] = []
    if log_dir is not None:
        candidates.append(Path(log_dir).expanduser())
    candidates.append(Path(dirs.user_log_dir))
    # Repo-local fallback for sandboxed runs
    candidates.append(Path.cwd() / ".capfi_runtime" / "logs")

    for candidate in candidates:
        try:
            candidate.mkdir(parents=True, exist_ok=True)
            marker = candidate / ".write_test"
            marker.write_text("ok", encoding="utf-8")
            marker.unlink(missing_ok=True)
        except OSError:
            continue
        return AppPaths(log_dir=candidate)

    raise RuntimeError("Unable to create a writable log directory for capfi")
