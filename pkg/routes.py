import argparse
from typing import Callable, Dict, List, Tuple

from pydantic import ValidationError

from controllers import certificate_controller, orbits_controller, profile_controller
from models.eggbeater_models import RunConfig, SurfaceMode
from utils.errors import InvalidInput

Handler = Callable[[RunConfig], int]

router: Dict[str, Handler] = {
    "profile": profile_controller.write_profile,
    "figure-data": profile_controller.write_figure_data,
    "orbits": orbits_controller.write_orbits,
    "spectrum": certificate_controller.write_spectrum,
    "certify": certificate_controller.write_certificate,
    "sweep": certificate_controller.write_sweep,
}


def homotopy_class(text: str) -> Tuple[int, int]:
    """Parse 'm,n' into a class tuple"""
    try:
        m, n = (int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"class must look like m,n, got {text!r}")
    return m, n


def a_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"A-list must be comma-separated numbers, got {text!r}")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output", "-o", default=".", help="Output directory")


def _system_args(parser: argparse.ArgumentParser, require_a: bool = True) -> None:
    if require_a:
        parser.add_argument("--A", type=float, required=True, help="Shear time of the first factor")
        parser.add_argument("--B", type=float, default=None, help="Shear time of the second factor (default 2A)")
    parser.add_argument("--mode", choices=[m.value for m in SurfaceMode], default=SurfaceMode.SURFACE.value)
    parser.add_argument("--perturbed", action="store_true", help="Use the fields cut off near q_0")
    parser.add_argument("--samples", type=int, default=256, help="Trajectory samples per unit time")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eggbeater", description="Eggbeater maps, action spectra and Hofer bounds")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("profile", "figure-data"):
        p = sub.add_parser(name, help=f"Write {name} table")
        p.add_argument("--resolution", type=int, default=1001, help="Number of grid points on [0, 1]")
        _common(p)

    p = sub.add_parser("orbits", help="Periodic points in a homotopy class")
    _system_args(p)
    p.add_argument("--class", dest="homotopy_class", type=homotopy_class, default=(1, 0))
    p.add_argument("--trajectories", action="store_true", help="Also write trajectories.csv")
    _common(p)

    p = sub.add_parser("spectrum", help="Action spectrum of a homotopy class")
    _system_args(p)
    p.add_argument("--class", dest="homotopy_class", type=homotopy_class, default=(1, 0))
    _common(p)

    p = sub.add_parser("certify", help="Non-autonomy certificate for one A")
    _system_args(p)
    _common(p)

    p = sub.add_parser("sweep", help="Certificates for several A plus summary.csv")
    p.add_argument("--A-list", dest="a_list", type=a_list, required=True, help="Comma-separated A values")
    _system_args(p, require_a=False)
    _common(p)
    return parser


def to_config(args: argparse.Namespace) -> RunConfig:
    """
    Validate parsed arguments into a RunConfig

    Raises:
        InvalidInput: If a field is out of range
    """
    fields = {
        "A": getattr(args, "A", None),
        "B": getattr(args, "B", None),
        "mode": getattr(args, "mode", SurfaceMode.SURFACE.value),
        "perturbed": getattr(args, "perturbed", False),
        "output_dir": args.output,
        "samples": getattr(args, "samples", 256),
        "resolution": getattr(args, "resolution", 1001),
        "homotopy_class": getattr(args, "homotopy_class", (1, 0)),
        "a_list": tuple(getattr(args, "a_list", ())),
        "trajectories": getattr(args, "trajectories", False),
    }
    try:
        return RunConfig(**fields)
    except ValidationError as e:
        raise InvalidInput(f"Invalid arguments: {e.errors()[0]['msg']}")


def dispatch(argv: List[str]) -> int:
    args = build_parser().parse_args(argv)
    return router[args.command](to_config(args))
