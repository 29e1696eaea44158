import logging
from typing import Dict, Optional

from otto_engine.common.engine_instance.local_interface_model.command.command_interface import command_interface

log = logging.getLogger("RUNNER")


class CommandRunner:
    def __init__(self, model: Optional[command_interface] = None):
        self.model = model

    def run(self) -> Optional[Dict]:
        if not self.model:
            log.error("no command provided")
            return None

        log.info(f"starting '{self.model.name}' -> {self.model.out_dir}")
        self.model.out_dir.mkdir(parents=True, exist_ok=True)
        summary = self.model.run()
        log.info(f"finished '{self.model.name}', wrote {len(self.model.written)} file(s)")
        for path in self.model.written:
            log.info(f"  {path}")
        return summary
