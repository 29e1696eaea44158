import sys

from optomech_otto.scripts.cli import main
from otto_engine.runtime_manager import check_runtime_status, init_runtime

if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] == "status":
        init_runtime()
        check_runtime_status()
        sys.exit(0)
    sys.exit(main())
