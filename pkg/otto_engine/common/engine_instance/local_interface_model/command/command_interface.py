# otto_engine/common/engine_instance/local_interface_model/command/command_interface.py
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List


class command_interface(ABC):
    @property
    @abstractmethod
    def name(self) -> str:
        ...

    @property
    @abstractmethod
    def out_dir(self) -> Path:
        ...

    @property
    @abstractmethod
    def written(self) -> List[Path]:
        ...

    @abstractmethod
    def run(self) -> Dict:
        """Compute, write the output files and return the JSON summary."""
        ...
