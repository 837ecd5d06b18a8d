import sys
from typing import List, Optional

from dotenv import load_dotenv

import routes
from utils.errors import EggbeaterError
from utils.logger import setup_logger

logger = setup_logger(__name__)


def run(argv: Optional[List[str]] = None) -> int:
    """
    Command-line entry point

    Exit codes: 0 success, 2 invalid arguments, 3 certificate unavailable,
    4 numerical failure.
    """
    load_dotenv()
    try:
        return routes.dispatch(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as e:
        # argparse exits 0 for --help and 2 for usage errors
        return 0 if e.code in (0, None) else 2
    except EggbeaterError as e:
        logger.error(f"{type(e).__name__}: {e.detail}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected failure: {e}")
        return 4


if __name__ == "__main__":
    sys.exit(run())
