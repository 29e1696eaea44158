# otto_engine/common/run_signature.py
TOOL_NAME = "optomech-otto"
TOOL_VERSION = "0.3.0"


def run_signature(command: str, note: str = "") -> str:
    base = f"{TOOL_NAME} {TOOL_VERSION} {command}".strip()
    if note:
        return f"{base} :: {note}"
    return base
