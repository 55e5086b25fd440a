"""
Command-line entry point: decompose matrices, generate instances, build orbit points,
run the verification suites and curvature certificates.

Exit codes: 0 success, 1 input/configuration/usage error, 2 solver stall,
3 a verified property failed.
"""
import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

# Add the parent directory to sys.path
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
if parent_dir not in sys.path:
    sys.path.append(parent_dir)

from configuration.config import NORM_FLAGS, SAMPLING, SOLVER, SUITES, TOLERANCES
from core.errors import ConfigurationError, CprError, SolverStall
from core.matrices import DEFAULT_TOLERANCES, ROLES, NormKind, Tolerances, random_instance
from curvature.criteria import curvature_certificate
from expectations.chains import ExpectationChain
from expectations.partitions import BlockPartition
from homogeneous.cosets import GCoset, coset_reduce, from_tangent, is_sigma_fixed, project_to_base, to_tangent
from homogeneous.orbits import coadjoint_of, coadjoint_setup, flag_of, stiefel_of
from splitting.cpr import FALLBACKS, SolverConfig
from splitting.extended import extended_split
from utils.document_utils import dump_document, matrix_to_document, read_matrix, save_json_document

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_STALL = 2
EXIT_PROPERTY = 3

ORBITS = ("flag", "stiefel", "coadjoint")

TOLERANCE_FLAGS = {
    "herm_tol": "Hermitian symmetrization tolerance",
    "unitary_tol": "Unitarity tolerance",
    "repair_limit": "Largest drift a role wrapper repairs",
    "pd_floor": "Positivity floor relative to the operator norm",
    "inv_floor": "Invertibility floor relative to the operator norm",
    "membership_tol": "Subalgebra membership tolerance",
    "check_tol": "Pass/fail threshold for verification residuals",
    "equality_tol": "Coset, bundle and tangent equality tolerance",
    "gap": "Smallest coadjoint eigenvalue gap"
}


@dataclass
class RunConfig:
    """Validated view of the command line"""
    command: str
    dims: List[int] = field(default_factory=lambda: [SAMPLING["dim"]])
    samples: int = SAMPLING["samples"]
    seed: int = SAMPLING["seed"]
    norm: str = "fro"
    partition: Optional[str] = None
    chain: Optional[str] = None
    input: Optional[str] = None
    out: Optional[str] = None
    tol: float = SOLVER["residual_tol"]
    fallback: str = SOLVER["fallback"]
    herm_tol: Optional[float] = None
    unitary_tol: Optional[float] = None
    repair_limit: Optional[float] = None
    pd_floor: Optional[float] = None
    inv_floor: Optional[float] = None
    membership_tol: Optional[float] = None
    check_tol: Optional[float] = None
    equality_tol: Optional[float] = None
    gap: Optional[float] = None
    max_iterations: int = SOLVER["max_iterations"]
    damping_shrink: float = SOLVER["damping_shrink"]
    suite: str = "all"
    role: Optional[str] = None
    orbit: str = "flag"
    x0: Optional[str] = None

    def validate(self):
        if self.samples < 1:
            raise ConfigurationError(f"--samples must be >= 1, got {self.samples}")
        bad = [dim for dim in self.dims if dim < 1]
        if bad:
            raise ConfigurationError(f"--dim entries must be >= 1, got {bad[0]}")
        if self.command != "curvature" and len(self.dims) != 1:
            raise ConfigurationError(f"--dim takes a single value for {self.command}, got {self.dims}")
        if self.norm not in NORM_FLAGS:
            raise ConfigurationError(f"--norm must be one of {', '.join(NORM_FLAGS)}, got {self.norm!r}")
        if self.suite != "all" and self.suite not in SUITES:
            raise ConfigurationError(f"--suite must be one of {', '.join(SUITES)} or all, got {self.suite!r}")
        if self.role is not None and self.role not in ROLES:
            raise ConfigurationError(f"--role must be one of {', '.join(ROLES)}, got {self.role!r}")
        if self.orbit not in ORBITS:
            raise ConfigurationError(f"--orbit must be one of {', '.join(ORBITS)}, got {self.orbit!r}")
        if self.partition and self.chain:
            raise ConfigurationError("Give either --partition or --chain, not both")
        # builds and checks the remaining values
        self.tolerances()
        self.solver_config()
        return self

    @property
    def dim(self) -> int:
        return self.dims[0]

    def tolerances(self) -> Tolerances:
        return DEFAULT_TOLERANCES.with_overrides(**{name: getattr(self, name) for name in TOLERANCES})

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            residual_tol=self.tol,
            max_iterations=self.max_iterations,
            damping_shrink=self.damping_shrink,
            fallback=self.fallback
        )

    def norm_kind(self) -> NormKind:
        return NormKind.parse(self.norm)

    def expectation_chain(self, dim: int) -> ExpectationChain:
        if self.chain:
            return ExpectationChain.parse(self.chain, dim, self.tolerances())
        if self.partition:
            return ExpectationChain.single(BlockPartition.parse(self.partition, dim), self.tolerances())
        return ExpectationChain.single(BlockPartition.diagonal(dim), self.tolerances())


def emit(config: RunConfig, document: dict):
    if config.out:
        save_json_document(config.out, document)
    else:
        sys.stdout.write(dump_document(document))


def print_checks(title: str, checks):
    total_checks = len(checks)
    passed_checks = sum(1 for _, passed in checks if passed)

    print(f"\n{title}: {passed_checks}/{total_checks} checks passed", file=sys.stderr)
    print("-" * 50, file=sys.stderr)

    for name, passed in checks:
        status = "✅ PASS" if passed else "❌ FAIL"
        print(f"{status} | {name}", file=sys.stderr)

    print("-" * 50, file=sys.stderr)
    logger.info(f"{title} completed: {passed_checks}/{total_checks} checks passed")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_decompose(config: RunConfig) -> int:
    """Extended CPR splitting of the matrix in --input along --partition or --chain"""
    if not config.input:
        raise ConfigurationError("decompose needs --input PATH")
    g = read_matrix(config.input)
    chain = config.expectation_chain(g.shape[0])
    factors = extended_split(g, chain, config.solver_config())
    document = factors.to_document()
    document["chain"] = chain.to_document()
    logger.info(f"Decomposed {g.shape[0]}x{g.shape[0]} input: residual {factors.residual:.3e}")
    emit(config, document)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    """Run one or all property suites; exit 3 when a property fails"""
    from automation.verification_suites import run_suites

    names = list(SUITES) if config.suite == "all" else [config.suite]
    results = run_suites(names, config.dim, config.samples, config.seed, config.solver_config(), config.tolerances())
    checks = [check for result in results for check in result.checks()]
    print_checks("Verification Summary", checks)
    passed = all(result.all_passed for result in results)
    emit(config, {
        "dim": config.dim,
        "samples": config.samples,
        "seed": config.seed,
        "suites": {result.suite: result.to_document() for result in results},
        "passed": passed
    })
    return EXIT_OK if passed else EXIT_PROPERTY


def cmd_generate(config: RunConfig) -> int:
    """Deterministic random matrix of --role"""
    matrix = random_instance(config.dim, config.seed, config.role or "invertible", config.tolerances())
    emit(config, matrix_to_document(matrix.data))
    return EXIT_OK


def _orbit_element(config: RunConfig, dim: int, default_role: str) -> np.ndarray:
    if config.input:
        matrix = read_matrix(config.input)
        if matrix.shape[0] != dim:
            raise ConfigurationError(f"--input has dim {matrix.shape[0]}, expected {dim}")
        return matrix
    return random_instance(dim, config.seed, config.role or default_role, config.tolerances()).data


def _homogeneous_images(s: GCoset, cfg: SolverConfig) -> dict:
    point = coset_reduce(s, cfg)
    tangent = to_tangent(s, cfg)
    return {
        "coset": matrix_to_document(s.g.data),
        "bundle": point.to_document(),
        "tangent": tangent.to_document(),
        "tangent_round_trip": from_tangent(tangent).distance(s),
        "sigma_fixed": bool(is_sigma_fixed(s))
    }


def cmd_orbit(config: RunConfig) -> int:
    """Orbit point of --orbit with its coset, bundle point, tangent vector and sigma_G verdict"""
    tolerances = config.tolerances()
    cfg = config.solver_config()

    if config.orbit == "coadjoint":
        if config.x0:
            X0 = read_matrix(config.x0)
        else:
            X0 = np.diag(1j * np.linspace(-1.0, 1.0, config.dim)) if config.dim > 1 else np.array([[1j]])
        model = coadjoint_setup(X0, tolerances)
        g = _orbit_element(config, model.X0.dim, "invertible")
        document = coadjoint_of(model, g).to_document(model.X0.data)
        document.update(_homogeneous_images(model.coset(g), cfg))
        document["orbit"] = "coadjoint"
        document["blocks"] = list(model.partition.blocks)
        document["eigenprojections"] = [matrix_to_document(p) for p in model.eigenprojections()]
        document["finsler_norm"] = model.finsler_norm.label
        emit(config, document)
        return EXIT_OK

    dim = config.dim
    if config.orbit == "flag":
        partition = BlockPartition.parse(config.partition, dim) if config.partition else BlockPartition.diagonal(dim)
        if partition.corner_flag:
            raise ConfigurationError(f"Flags need a total partition; {partition.to_text()} is a corner")
    else:
        partition = BlockPartition.parse(config.partition, dim) if config.partition else BlockPartition(dim, (dim - 1,))
        if not partition.corner_flag:
            raise ConfigurationError(f"Stiefel orbits need a corner partition (trailing '+'), got {partition.to_text()}")
        if len(partition.blocks) != 1:
            raise ConfigurationError(f"Stiefel orbits need a single block before the '+', got {partition.to_text()}")

    from expectations.conditional import ConditionalExpectation

    E = ConditionalExpectation(partition, tolerances)
    s = GCoset(_orbit_element(config, dim, "unitary"), E)
    base = project_to_base(coset_reduce(s, cfg))
    if config.orbit == "flag":
        point = flag_of(base.u, partition, tolerances).to_document()
    else:
        point = stiefel_of(base.u, partition, tolerances).to_document()
    document = {"orbit": config.orbit, "partition": partition.to_document(), "point": point}
    document.update(_homogeneous_images(s, cfg))
    emit(config, document)
    return EXIT_OK


def cmd_curvature(config: RunConfig) -> int:
    """Curvature certificates for every --dim in the chosen norm"""
    kind = config.norm_kind()
    reports = [curvature_certificate(dim, kind, config.samples, config.seed) for dim in config.dims]
    checks = [(f"dim {report.dim}: {name}", ok) for report in reports for name, ok in report.checks()]
    print_checks("Curvature Summary", checks)
    passed = all(report.all_passed for report in reports)
    emit(config, {"norm": kind.label, "reports": [report.to_document() for report in reports], "passed": passed})
    return EXIT_OK if passed else EXIT_PROPERTY


COMMANDS = {
    "decompose": cmd_decompose,
    "verify": cmd_verify,
    "generate": cmd_generate,
    "orbit": cmd_orbit,
    "curvature": cmd_curvature,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class CprArgumentParser(argparse.ArgumentParser):
    """Usage errors become ConfigurationError so they map to exit code 1"""

    def error(self, message):
        raise ConfigurationError(f"{self.prog}: {message}")


def _dims(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--dim expects integers separated by commas, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    shared = CprArgumentParser(add_help=False)
    shared.add_argument('--seed', type=int, default=SAMPLING["seed"], help='Random seed')
    shared.add_argument('--dim', type=_dims, default=[SAMPLING["dim"]], dest='dims',
                        help='Matrix dimension (comma list allowed for curvature)')
    shared.add_argument('--samples', type=int, default=SAMPLING["samples"], help='Sampled cases per property')
    shared.add_argument('--tol', type=float, default=SOLVER["residual_tol"], help='Solver residual tolerance')
    shared.add_argument('--max-iterations', type=int, default=SOLVER["max_iterations"],
                        help='Fixed-point iterations before the fallback')
    shared.add_argument('--damping-shrink', type=float, default=SOLVER["damping_shrink"],
                        help='Step shrink factor of the damped fixed point')
    for name, text in TOLERANCE_FLAGS.items():
        shared.add_argument(f"--{name.replace('_', '-')}", type=float,
                            help=f"{text} (default {TOLERANCES[name]:g})")
    shared.add_argument('--norm', default='fro', help=f"Norm: {', '.join(NORM_FLAGS)}")
    shared.add_argument('--partition', help="Block sizes 'b1,b2,...' with a trailing ',+' for a corner")
    shared.add_argument('--chain', help="Partitions 'p1;p2;...' listed finest-first")
    shared.add_argument('--input', help='Input matrix document')
    shared.add_argument('--out', help='Output document (stdout when omitted)')
    shared.add_argument('--verbose', action='store_true', help='Debug logging')

    parser = CprArgumentParser(
        prog='run_cpr',
        description='CPR splittings and complexified homogeneous spaces at matrix scale',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python -m automation.run_cpr generate --dim 4 --role invertible --seed 11 --out g.json
  python -m automation.run_cpr decompose --input g.json --partition 2,2
  python -m automation.run_cpr decompose --input g.json --chain "1,1,1,1;2,2"
  python -m automation.run_cpr verify --suite splitting --dim 4 --samples 50 --seed 1
  python -m automation.run_cpr orbit --orbit stiefel --dim 3 --partition 1,+
  python -m automation.run_cpr orbit --orbit coadjoint --x0 x0.json --input g.json
  python -m automation.run_cpr curvature --dim 2,3,4 --norm s1 --samples 500
        """
    )
    commands = parser.add_subparsers(dest='command', required=True)

    decompose = commands.add_parser('decompose', parents=[shared], help='Extended CPR splitting of --input')
    decompose.add_argument('--fallback', choices=FALLBACKS, default=SOLVER["fallback"],
                           help='Solver behaviour when the fixed point stalls')

    verify = commands.add_parser('verify', parents=[shared], help='Run property suites')
    verify.add_argument('--suite', choices=list(SUITES) + ['all'], default='all', help='Suite to run')

    generate = commands.add_parser('generate', parents=[shared], help='Random instance of a role')
    generate.add_argument('--role', choices=ROLES, default='invertible', help='Matrix role')

    orbit = commands.add_parser('orbit', parents=[shared], help='Orbit point and its homogeneous images')
    orbit.add_argument('--orbit', choices=ORBITS, default='flag', help='Orbit model')
    orbit.add_argument('--x0', help='Coadjoint base point document (skew-Hermitian)')
    orbit.add_argument('--role', choices=ROLES, help='Role of the random group element')

    commands.add_parser('curvature', parents=[shared], help='Semi-negative curvature certificates')
    return parser


def parse_config(argv: Optional[List[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    values = {
        key: value for key, value in vars(args).items()
        if key in RunConfig.__dataclass_fields__ and value is not None
    }
    return RunConfig(**values).validate()


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(
        level=logging.DEBUG if "--verbose" in argv else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s"
    )
    try:
        config = parse_config(argv)
        return COMMANDS[config.command](config)
    except SolverStall as e:
        logger.error(f"Solver stalled: {str(e)}")
        return EXIT_STALL
    except (CprError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {str(e)}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
