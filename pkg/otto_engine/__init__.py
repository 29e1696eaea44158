from .runtime_manager import init_runtime, check_runtime_status
from .command_runner import CommandRunner

__all__ = ["init_runtime", "check_runtime_status", "CommandRunner"]
