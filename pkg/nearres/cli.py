"""
Command-line surface: `nearres <subcommand> [flags]`.

Every subcommand produces one table, written as CSV next to a JSON run
manifest. Status lines go to stdout; tables only go to files.
"""

import sys
import json
import logging
import argparse
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import __version__
from .config import DEFAULT_CONFIG_FILE, RuntimeSettings, load_settings, setup_logging
from .counting import (
    aspect_ratio_sweep,
    fit_slice_constants,
    jordan_trials,
    lower_bound_table,
    planar_slice_check,
    slice_table,
    sublevel_count_table,
)
from .errors import ConfigError, NumericalFailure, ValidationError
from .field import write_snapshot
from .lattice import TorusGeometry, adjust, as_fraction
from .resonance import BandwidthMode, BandwidthSpec, count_report
from .solver import SimConfig, error_scan, initial_field, run
from .sublevel import SIGN_ORDER, SublevelProblem, elliptic_identity_sweep, theorem_volume_bound, volume_mc

logger = logging.getLogger(__name__)


# -- flag value parsers (argparse reports their __name__) -------------------

def real(text: str) -> float:
    return float(as_fraction(text))


def count(text: str) -> int:
    value = as_fraction(text)
    if value.denominator != 1:
        raise ValueError(f"not an integer: {text}")
    return int(value)


def real_list(text: str) -> List[float]:
    return [real(part) for part in text.split(',') if part.strip()]


def int_list(text: str) -> List[int]:
    return [count(part) for part in text.split(',') if part.strip()]


def vector(text: str) -> Tuple[int, int, int]:
    parts = int_list(text)
    if len(parts) != 3:
        raise ValueError(f"expected n1,n2,n3, got {text}")
    return parts[0], parts[1], parts[2]


class NearResArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"❌ {self.prog}: {message}\n")


# -- run manifest ---------------------------------------------------------------

@dataclass
class RunManifest:
    subcommand: str
    flags: Dict[str, Any]
    seed: Optional[int]
    version: str
    geometry: Dict[str, str]
    timestamp: str = field(default_factory=lambda: datetime.now().isoformat(timespec='seconds'))
    outputs: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'subcommand': self.subcommand,
            'flags': self.flags,
            'seed': self.seed,
            'version': self.version,
            'geometry': self.geometry,
            'timestamp': self.timestamp,
            'outputs': self.outputs,
        }

    def write(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False, default=str)
            f.write('\n')
        return path


def write_table(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n', encoding='utf-8')
    return path


# -- subcommand handlers --------------------------------------------------------

@dataclass
class Outcome:
    table: pd.DataFrame
    summary: List[str] = field(default_factory=list)
    extra_files: List[Path] = field(default_factory=list)


def _geometry(args) -> TorusGeometry:
    return TorusGeometry(args.l1, args.l2)


def _spec(args) -> BandwidthSpec:
    mode = BandwidthMode(args.mode.replace('-', '_'))
    if mode is BandwidthMode.THEOREM:
        return BandwidthSpec.theorem(args.c_hat, args.cap)
    if mode is BandwidthMode.CONSTANT:
        return BandwidthSpec.constant(args.delta)
    if mode is BandwidthMode.ZERO:
        return BandwidthSpec.zero()
    return BandwidthSpec.all_pass()


def cmd_triads(args, settings: RuntimeSettings) -> Outcome:
    table = count_report(args.n or [], _spec(args), _geometry(args), args.c_bound, args.threads,
                         margin=settings.tie_margin)
    if not len(table):
        return Outcome(table, ["no wavevectors given"])
    summary = [f"{len(table)} wavevectors, counts {table['count'].tolist()}"]
    return Outcome(table, summary)


def cmd_count_lower(args, settings: RuntimeSettings) -> Outcome:
    if args.n_values:
        n_values = args.n_values
    else:
        n_values, big_n = [], args.n_min
        while big_n <= args.n_max:
            n_values.append(big_n)
            big_n *= 2
    table = lower_bound_table(args.variant, n_values, args.delta)
    largest = int(table['exact_count'].max()) if len(table) else 0
    summary = [f"{args.variant}: {len(table)} rows, largest count {largest}"]
    if args.variant == 'slow-fast' and len(table):
        summary.append(f"formula matched on {int(table['matches'].sum())}/{len(table)} rows")
    return Outcome(table, summary)


def cmd_volume(args, settings: RuntimeSettings) -> Outcome:
    geom = _geometry(args)
    if args.counts:
        table = sublevel_count_table(args.n, args.delta, geom, args.samples, args.seed, args.threads,
                                     margin=settings.tie_margin)
    else:
        rows = []
        for s1, s2 in SIGN_ORDER:
            prob = SublevelProblem(adjust(args.n, geom), s1, s2, args.delta)
            volume, error = volume_mc(prob, args.samples, args.seed, args.threads)
            rows.append({'sigma1': s1, 'sigma2': s2, 'volume': volume, 'volume_error': error,
                         'bound': theorem_volume_bound(prob)})
        table = pd.DataFrame(rows)
    table['ratio'] = np.where(table['bound'] > 0, table['volume'] / table['bound'].where(table['bound'] > 0, 1.0), 0.0)
    return Outcome(table, [f"max volume/bound ratio {table['ratio'].max():.4g}"])


def cmd_elliptic_check(args, settings: RuntimeSettings) -> Outcome:
    table = elliptic_identity_sweep(args.trials, args.seed)
    worst = {c: float(table[c].max()) for c in table.columns} if len(table) else {}
    return Outcome(table, [f"worst {name}: {value:.3e}" for name, value in worst.items()])


def cmd_jordan_check(args, settings: RuntimeSettings) -> Outcome:
    table = jordan_trials(args.trials, args.seed, args.adversarial_share, args.size)
    failures = int((~table['holds'].astype(bool)).sum())
    return Outcome(table, [f"{len(table)} families, {int(table['exceptional'].gt(0).sum())} with exceptional points, "
                           f"{failures} failures"])


def _sim_config(args, settings: RuntimeSettings, **overrides) -> SimConfig:
    cfg = SimConfig(
        geom=_geometry(args), radius=args.radius, omega=args.omega, mu=args.mu, spec=_spec(args),
        t_end=args.t_end, dt=args.dt, seed=args.seed, record_stride=args.record_stride,
        hs_orders=tuple(args.hs_orders), smoothness=args.smoothness, amplitude=args.amplitude,
        blowup_factor=settings.blowup_factor, reality_tol=settings.reality_tol,
        divergence_tol=settings.divergence_tol, max_modes=settings.max_modes,
    )
    return replace(cfg, **overrides) if overrides else cfg


def cmd_simulate(args, settings: RuntimeSettings) -> Outcome:
    cfg = _sim_config(args, settings, keep_snapshots=bool(args.snapshot))
    traj = run(cfg, initial_field(cfg), args.system)
    table = traj.to_frame()
    extra = [write_snapshot(traj.final, args.snapshot)] if args.snapshot else []
    return Outcome(table, [f"{len(table)} samples, final energy residual {table['energy_residual'].iloc[-1]:.3e}"],
                   extra)


def cmd_error_scan(args, settings: RuntimeSettings) -> Outcome:
    cfg = _sim_config(args, settings)
    table = error_scan(cfg, args.omegas, args.s_prime, threads=args.threads)
    return Outcome(table, [f"{len(table)} rotation rates, slope {table['slope'].iloc[0]:.4g}" if len(table)
                           else "no rotation rates given"])


def cmd_planar_check(args, settings: RuntimeSettings) -> Outcome:
    if args.aspect_sweep:
        table = aspect_ratio_sweep(args.n, args.k3, args.delta, samples=args.samples, seed=args.seed,
                                   c_prime=args.c_prime)
        spread = table['spread'].iloc[0]
        return Outcome(table, [f"fitted C per L1: {table['c'].round(4).tolist()}, spread {spread:.3g}"])
    geom = _geometry(args)
    reports = [planar_slice_check(args.n, k3, args.delta, args.sign1, args.sign2, args.samples, args.seed, geom)
               for k3 in args.k3]
    c, c_prime = fit_slice_constants(reports, args.c_prime)
    table = slice_table(reports)
    return Outcome(table, [f"{len(table)} slices, fitted C={c:.4g} with C'={c_prime:g}"])


# -- parser ---------------------------------------------------------------------

def _common_parser(settings: RuntimeSettings) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--l1', default='1', help='aspect ratio L1 (decimal string)')
    common.add_argument('--l2', default='1', help='aspect ratio L2 (decimal string)')
    common.add_argument('--threads', type=count, default=settings.threads)
    common.add_argument('--seed', type=count, default=None)
    common.add_argument('--config', default=None, help='YAML/JSON settings file')
    common.add_argument('--out', '--csv', dest='out', default=None, help='output CSV path')
    common.add_argument('--log-level', default=None)
    return common


def _spec_flags(p: argparse.ArgumentParser, mode: str = 'theorem') -> None:
    p.add_argument('--mode', choices=['theorem', 'constant', 'zero', 'all-pass'], default=mode)
    p.add_argument('--c-hat', type=real, default=1.0)
    p.add_argument('--cap', type=real, default=0.49)
    p.add_argument('--delta', type=real, default=0.1, help='bandwidth for --mode constant')


def _sim_flags(p: argparse.ArgumentParser, t_end: float) -> None:
    p.add_argument('--radius', type=real, default=6.0)
    p.add_argument('--omega', type=real, default=0.0)
    p.add_argument('--mu', type=real, default=0.01)
    p.add_argument('--dt', type=real, default=1e-3)
    p.add_argument('--t-end', type=real, default=t_end)
    p.add_argument('--record-stride', type=count, default=1)
    p.add_argument('--hs-orders', type=real_list, default=[2.0])
    p.add_argument('--smoothness', type=real, default=4.0)
    p.add_argument('--amplitude', type=real, default=1.0)
    _spec_flags(p)


HANDLERS: Dict[str, Callable[[Any, RuntimeSettings], Outcome]] = {
    'triads': cmd_triads,
    'count-lower': cmd_count_lower,
    'volume': cmd_volume,
    'elliptic-check': cmd_elliptic_check,
    'jordan-check': cmd_jordan_check,
    'simulate': cmd_simulate,
    'error-scan': cmd_error_scan,
    'planar-check': cmd_planar_check,
}


def build_parser(settings: RuntimeSettings) -> argparse.ArgumentParser:
    parser = NearResArgumentParser(prog='nearres', description='Near-resonant rotating Navier-Stokes toolkit')
    parser.add_argument('--version', action='version', version=f"nearres {__version__}")
    subparsers = parser.add_subparsers(dest='subcommand', required=True, parser_class=NearResArgumentParser)
    common = _common_parser(settings)

    p = subparsers.add_parser('triads', parents=[common], help='near-resonant triad counts per wavevector')
    p.add_argument('--n', type=vector, action='append', help='wavevector n1,n2,n3 (repeatable)')
    p.add_argument('--c-bound', type=real, default=None, help='bound constant; fitted when omitted')
    _spec_flags(p)

    p = subparsers.add_parser('count-lower', parents=[common], help='lower-bound constructions')
    p.add_argument('--variant', choices=['slow-fast', 'fast-fast'], default='slow-fast')
    p.add_argument('--n-min', type=count, default=8)
    p.add_argument('--n-max', type=count, default=64)
    p.add_argument('--n-values', type=int_list, default=None)
    p.add_argument('--delta', type=real_list, default=[0.01])

    p = subparsers.add_parser('volume', parents=[common], help='Monte Carlo sublevel volumes')
    p.add_argument('--n', type=vector, required=True)
    p.add_argument('--delta', type=real, default=0.01)
    p.add_argument('--samples', type=count, default=1_000_000)
    p.add_argument('--counts', action='store_true', help='add exact lattice counts per sign pair')

    p = subparsers.add_parser('elliptic-check', parents=[common], help='elliptic-integral identities')
    p.add_argument('--trials', type=count, default=1000)

    p = subparsers.add_parser('jordan-check', parents=[common], help='lattice points inside Jordan curves')
    p.add_argument('--trials', type=count, default=1000)
    p.add_argument('--adversarial-share', type=real, default=0.05)
    p.add_argument('--size', type=count, default=4)

    p = subparsers.add_parser('simulate', parents=[common], help='integrate the full or NR system')
    p.add_argument('--system', choices=['full', 'nr'], default='nr')
    p.add_argument('--snapshot', default=None, help='write the final field to this path')
    _sim_flags(p, t_end=1.0)

    p = subparsers.add_parser('error-scan', parents=[common], help='full vs NR error across rotation rates')
    p.add_argument('--omegas', type=real_list, required=True)
    p.add_argument('--s-prime', type=real, default=0.0)
    _sim_flags(p, t_end=0.5)

    p = subparsers.add_parser('planar-check', parents=[common], help='lattice counts on horizontal slices')
    p.add_argument('--n', type=vector, required=True)
    p.add_argument('--k3', type=real_list, required=True)
    p.add_argument('--delta', type=real, default=0.1)
    p.add_argument('--sign1', default='+')
    p.add_argument('--sign2', default='+')
    p.add_argument('--samples', type=count, default=200_000)
    p.add_argument('--c-prime', type=real, default=1.0)
    p.add_argument('--aspect-sweep', action='store_true', help='re-fit C across aspect ratios')

    for name, sub in subparsers.choices.items():
        defaults = _config_defaults(settings, name, sub)
        if defaults:
            sub.set_defaults(**defaults)
    return parser


def _config_defaults(settings: RuntimeSettings, name: str, sub: argparse.ArgumentParser) -> Dict[str, Any]:
    """Config `defaults` entries for one subcommand: its own section plus flat keys it knows"""
    known = {a.dest: a for a in sub._actions}
    values = {k: v for k, v in settings.defaults.items() if not isinstance(v, dict) and k in known}
    section = settings.defaults.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"defaults.{name} must be a mapping")
    for key, value in section.items():
        dest = key.replace('-', '_')
        if dest not in known:
            raise ConfigError(f"unknown flag '{key}' in defaults.{name}")
        values[dest] = value
    out = {}
    for dest, value in values.items():
        action = known[dest]
        if action.type is not None and isinstance(value, (str, int, float)) and not isinstance(value, bool):
            value = action.type(str(value))
        out[dest] = value
    return out


# -- dispatch ---------------------------------------------------------------------

def _preparse(argv: Sequence[str]) -> Tuple[Optional[str], Optional[str]]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument('--config', default=None)
    pre.add_argument('--log-level', default=None)
    known, _ = pre.parse_known_args(argv)
    return known.config, known.log_level


def _flag_snapshot(args) -> Dict[str, Any]:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(vars(args).items())}


def dispatch(argv: Sequence[str]) -> int:
    """Run one subcommand; 0 on success, 1 on bad input, 2 on numerical failure"""
    argv = list(argv)
    try:
        config_file, log_level = _preparse(argv)
        settings = load_settings(config_file or DEFAULT_CONFIG_FILE)
        if config_file and not Path(config_file).exists():
            raise ConfigError(f"config file not found: {config_file}")
        if log_level:
            settings = replace(settings, log_level=log_level)
        setup_logging(settings)
        parser = build_parser(settings)
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return int(e.code or 0)

        print(f"🚀 nearres {args.subcommand}")
        outcome = HANDLERS[args.subcommand](args, settings)
        out = Path(args.out) if args.out else Path(settings.output_dir) / f"{args.subcommand}.csv"
        csv_path = write_table(outcome.table, out)
        manifest = RunManifest(
            subcommand=args.subcommand,
            flags=_flag_snapshot(args),
            seed=args.seed,
            version=__version__,
            geometry={'l1': str(as_fraction(args.l1)), 'l2': str(as_fraction(args.l2))},
            outputs=[str(csv_path)] + [str(p) for p in outcome.extra_files],
        )
        manifest_path = manifest.write(csv_path.with_name(csv_path.name + '.manifest.json'))
    except ValidationError as e:
        logger.error(f"invalid input: {e}")
        print(f"❌ ERROR: {e}")
        return 1
    except NumericalFailure as e:
        logger.error(f"numerical failure: {e}")
        print(f"❌ NUMERICAL FAILURE: {e}")
        return 2
    except OSError as e:
        logger.error(f"cannot write output: {e}")
        print(f"❌ ERROR: cannot write output: {e}")
        return 1

    for line in outcome.summary:
        print(f"📊 {line}")
    print(f"✅ wrote {csv_path} ({len(outcome.table)} rows) and {manifest_path.name}")
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == '__main__':
    main()
