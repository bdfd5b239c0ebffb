"""Experiment harness: impulse maps, NMSE sweeps, self-checks, channel dumps.

Two simulation scenarios are built in.  ``type1`` is a radio-frequency
setting (TDL-C delay-power profile, speeds in km/h); ``type2`` is an
underwater-acoustic setting (exponential-decay profile, speeds in
knots).  All outputs are CSV/JSON; given the same configuration and
seed they are byte-identical across runs.

Exit codes: 0 success, 1 usage error, 2 infeasible configuration,
3 self-check failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import _accel
from .channel import (
    KMH,
    KNOT,
    ChannelRealization,
    derive_path,
    gen_tdlc,
    gen_uwa,
    save_channel,
    stream,
    sync_offset_taps,
)
from .core import RCP, ZP, DdFrame, FrameConfig, InfeasibleConfigError
from .ddmatrix import apply_rcp, apply_zp, build_G, dense_matrix, nmse, zp_range
from .modem import dd_to_time, time_to_dd
from .timesim import propagate_exact, propagate_taps, tap_response

IMPULSE_EXCESS_DELAY_S = 1.5e-3      # excess delay of the single impulse-map path
DB_FLOOR = -300.0                    # dB value written for exactly-zero cells

ORACLE_TOL = 1e-9
ORACLE_TOL_NMSE = 1e-12


class UsageError(Exception):
    pass


@dataclass
class ScenarioConfig:
    """Resolved experiment configuration (defaults <- config file <- flags)."""

    scenario: str
    c: float
    f_c: float
    f_s: float
    beta: float
    q: int
    prefix_mode: str
    n_list: list
    m_list: list
    vmax: list            # scenario units: km/h (type1) or knots (type2)
    realizations: int
    seed: int
    delay_spread_ns: float
    dse: str
    baseline_sync: str
    out: str | None


def scenario_defaults(scenario: str) -> ScenarioConfig:
    if scenario == "type1":
        return ScenarioConfig(
            scenario="type1", c=3.0e8, f_c=5.0e9, f_s=15.36e6, beta=0.1, q=8,
            prefix_mode=RCP, n_list=[32, 64], m_list=[128, 256, 512, 1024],
            vmax=[1000.0 / 2 ** k for k in range(7, -1, -1)],
            realizations=100, seed=0, delay_spread_ns=300.0,
            dse="both", baseline_sync="keep", out=None,
        )
    if scenario == "type2":
        return ScenarioConfig(
            scenario="type2", c=1500.0, f_c=12.5e3, f_s=5.0e3, beta=0.65, q=8,
            prefix_mode=RCP, n_list=[16, 32], m_list=[128, 256, 512, 1024],
            vmax=[5.0 / 2 ** k for k in range(7, -1, -1)],
            realizations=100, seed=0, delay_spread_ns=300.0,
            dse="both", baseline_sync="keep", out=None,
        )
    raise UsageError(f"unknown scenario {scenario!r}")


def vmax_to_si(sc: ScenarioConfig, v: float) -> float:
    return v * (KMH if sc.scenario == "type1" else KNOT)


def frame_config(sc: ScenarioConfig, M: int, N: int) -> FrameConfig:
    return FrameConfig(M=M, N=N, f_s=sc.f_s, f_c=sc.f_c, Q=sc.q, beta=sc.beta,
                       prefix_mode=sc.prefix_mode)


def child_seed(*key: int) -> int:
    """Derive one deterministic integer seed from a composite key."""
    return int(np.random.SeedSequence(list(key)).generate_state(1, np.uint64)[0])


def draw_channel(sc: ScenarioConfig, cfg: FrameConfig, v_si: float,
                 seed: int) -> ChannelRealization:
    if sc.scenario == "type1":
        return gen_tdlc(sc.delay_spread_ns * 1e-9, v_si, seed, cfg, c=sc.c)
    return gen_uwa(v_si, seed, cfg, c=sc.c)


# ---------------------------------------------------------------------------
# impulse maps
# ---------------------------------------------------------------------------


def impulse_maps(sc: ScenarioConfig, M: int, N: int, v_scenario: float) -> dict:
    """Received delay-Doppler magnitude maps for a single-path impulse.

    One path at 1.5 ms excess delay moving at ``v_scenario`` (scenario
    units); the frame carries a lone unit symbol at (0, 0).  Returns
    peak-normalized dB maps over delay bins [0, l_max_eff] for the
    squint-aware and squint-ignorant kernels.
    """
    cfg = frame_config(sc, M, N)
    v_si = vmax_to_si(sc, v_scenario)
    tau = sync_offset_taps(v_si, sc.c, cfg) * cfg.Ts + IMPULSE_EXCESS_DELAY_S
    path = derive_path(1.0, tau, v_si, sc.c, cfg)
    realization = ChannelRealization.from_paths([path], sc.c, v_si, cfg, seed=sc.seed)
    X = DdFrame.impulse(cfg)
    maps = {}
    for label, dse in (("on", True), ("off", False)):
        if sc.dse != "both" and sc.dse != label:
            continue
        H = build_G(realization, cfg, dse=dse, baseline_sync=sc.baseline_sync)
        Y = apply_rcp(H, X)
        mag = np.abs(Y.data[: H.l_max_eff + 1, :])
        mag = mag / mag.max()
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(mag)
        maps[label] = np.maximum(db, DB_FLOOR)
    return maps


def write_map_csv(db_map: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        fh.write("m," + ",".join(f"n{j}" for j in range(db_map.shape[1])) + "\n")
        for m in range(db_map.shape[0]):
            fh.write(f"{m}," + ",".join(f"{v:.10f}" for v in db_map[m]) + "\n")


def run_impulse(sc: ScenarioConfig, M: int, N: int, v_scenario: float) -> list:
    maps = impulse_maps(sc, M, N, v_scenario)
    base = sc.out or "impulse.csv"
    if base.endswith(".csv"):
        base = base[:-4]
    written = []
    for label, db_map in maps.items():
        path = f"{base}_dse_{label}.csv"
        write_map_csv(db_map, path)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# NMSE sweep
# ---------------------------------------------------------------------------


def nmse_point(sc: ScenarioConfig, cfg: FrameConfig, v_si: float,
               point_index: int) -> tuple[float, float]:
    """Mean and standard error of the modeling NMSE at one sweep point."""
    vals = np.empty(sc.realizations)
    for r in range(sc.realizations):
        ch = draw_channel(sc, cfg, v_si, child_seed(sc.seed, point_index, r))
        H = build_G(ch, cfg, dse=True)
        H_hat = build_G(ch, cfg, dse=False, baseline_sync=sc.baseline_sync)
        vals[r] = nmse(H, H_hat)
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return mean, stderr


def run_nmse_sweep(sc: ScenarioConfig, out_path=None) -> list:
    """Sweep NMSE over the (N, M) grid and v_max list; emit CSV rows."""
    rows = []
    point = 0
    for N in sc.n_list:
        for M in sc.m_list:
            cfg = frame_config(sc, M, N)
            for v in sc.vmax:
                v_si = vmax_to_si(sc, v)
                mean, stderr = nmse_point(sc, cfg, v_si, point)
                rows.append((sc.scenario, N, M, v_si, mean, stderr,
                             sc.realizations, sc.seed))
                point += 1
    path = out_path or sc.out or "nmse_sweep.csv"
    with open(path, "w") as fh:
        fh.write("scenario,N,M,v_max_si,nmse_mean,nmse_stderr,n_real,seed\n")
        for row in rows:
            fh.write(f"{row[0]},{row[1]},{row[2]},{row[3]:.10g},"
                     f"{row[4]:.12e},{row[5]:.12e},{row[6]},{row[7]}\n")
    return rows


# ---------------------------------------------------------------------------
# self-check
# ---------------------------------------------------------------------------


def _rel_max_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = float(np.max(np.abs(b)))
    if scale == 0.0:
        return float(np.max(np.abs(a - b)))
    return float(np.max(np.abs(a - b)) / scale)


def _random_offgrid_channel(cfg: FrameConfig, c: float, b_max: float,
                            n_paths: int, seed: int) -> ChannelRealization:
    rng = stream(seed, 4242)
    sync = sync_offset_taps(b_max * c, c, cfg)
    b = rng.uniform(-b_max, b_max, n_paths)
    ls = sync + rng.uniform(0.0, 3.0, n_paths)
    hs = rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)
    paths = [derive_path(hs[i], ls[i] * cfg.Ts, b[i] * c, c, cfg)
             for i in range(n_paths)]
    return ChannelRealization.from_paths(paths, c, b_max * c, cfg, seed=seed)


def run_oracle_check(sc: ScenarioConfig, M: int = 32, N: int = 8,
                     corrupt: bool = False) -> dict:
    """Cross-validate every propagation route on a small frame.

    Compares the direct continuous-time evaluation against the tap form
    and both delay-Doppler matrix forms, and the banded NMSE against the
    dense Frobenius computation.  ``corrupt`` perturbs one kernel value
    first (test hook) so a broken detector cannot go unnoticed.
    """
    q = min(sc.q, (M - 1) // 8)
    cfg = FrameConfig(M=M, N=N, f_s=sc.f_s, f_c=sc.f_c, Q=q, beta=sc.beta,
                      prefix_mode=RCP)
    b_max = 2.0 / (cfg.N * cfg.M)
    ch = _random_offgrid_channel(cfg, sc.c, b_max, n_paths=3, seed=sc.seed)
    rng = stream(sc.seed, 7)
    X = DdFrame(rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N)))

    tx = dd_to_time(X, cfg)
    rx_exact = propagate_exact(tx, ch, cfg)
    rx_taps = propagate_taps(tx, tap_response(ch, cfg), cfg)
    err_taps = _rel_max_err(rx_taps.body, rx_exact.body)

    Y_exact = time_to_dd(rx_exact, cfg)
    H = build_G(ch, cfg, dse=True)
    if corrupt:
        G = H.G.copy()
        G[0, 0, 0] += 0.01 * np.max(np.abs(G))
        H = dataclasses.replace(H, G=G)
    Y_dd = apply_rcp(H, X)
    err_rcp = _rel_max_err(Y_dd.data, Y_exact.data)

    # zero-padded framing on a support-compliant frame
    cfg_zp = dataclasses.replace(cfg, prefix_mode=ZP)
    m_min, m_max = zp_range(ch, cfg_zp)
    Xz_data = np.zeros((M, N), dtype=np.complex128)
    Xz_data[m_min:m_max + 1] = (rng.standard_normal((m_max - m_min + 1, N))
                                + 1j * rng.standard_normal((m_max - m_min + 1, N)))
    Xz = DdFrame(Xz_data)
    H_zp = build_G(ch, cfg_zp, dse=True)
    Y_zp = apply_zp(H_zp, Xz)
    Y_rcp_on_z = apply_rcp(H, Xz)
    err_zp_vs_rcp = _rel_max_err(Y_zp.data, Y_rcp_on_z.data)
    rx_z = propagate_exact(dd_to_time(Xz, cfg_zp), ch, cfg_zp)
    err_zp_vs_exact = _rel_max_err(Y_zp.data, time_to_dd(rx_z, cfg_zp).data)

    H_hat = build_G(ch, cfg, dse=False)
    banded = nmse(H, H_hat)
    Hd = dense_matrix(H)
    Hd_hat = dense_matrix(H_hat)
    dense = (np.linalg.norm(Hd - Hd_hat, "fro") ** 2
             / np.linalg.norm(Hd, "fro") ** 2)
    err_nmse = abs(banded - dense) / dense

    errors = {
        "taps_vs_exact": err_taps,
        "dd_rcp_vs_exact": err_rcp,
        "zp_vs_rcp": err_zp_vs_rcp,
        "zp_vs_exact": err_zp_vs_exact,
        "nmse_banded_vs_dense": err_nmse,
    }
    tolerances = {name: (ORACLE_TOL_NMSE if name == "nmse_banded_vs_dense"
                         else ORACLE_TOL) for name in errors}
    ok = all(errors[name] <= tolerances[name] for name in errors)
    return {
        "config": {"M": M, "N": N, "Q": q, "beta": sc.beta, "seed": sc.seed,
                   "backend": _accel.active_backend()},
        "max_rel_errors": errors,
        "tolerances": tolerances,
        "pass": ok,
    }


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route all usage problems to exit code 1
        raise UsageError(message)


def _add_common(p: _Parser) -> None:
    p.add_argument("--scenario", choices=["type1", "type2"])
    p.add_argument("--config", help="JSON file mirroring the configuration fields")
    p.add_argument("-M", dest="m_list", help="comma-separated symbol counts")
    p.add_argument("-N", dest="n_list", help="comma-separated subcarrier counts")
    p.add_argument("--vmax", help="comma-separated maximum speeds "
                                  "(km/h for type1, knots for type2)")
    p.add_argument("--realizations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--delay-spread-ns", type=float, dest="delay_spread_ns")
    p.add_argument("--q", type=int)
    p.add_argument("--dse", choices=["on", "off", "both"])
    p.add_argument("--out")
    p.add_argument("--baseline-sync", choices=["keep", "drop"],
                   dest="baseline_sync")


def _parse_int_list(text: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _parse_float_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def resolve_config(args, default_scenario: str = "type1") -> ScenarioConfig:
    """Merge scenario defaults, the optional config file and CLI flags."""
    file_doc = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {args.config}: {exc}") from exc
    scenario = args.scenario or file_doc.get("scenario") or default_scenario
    sc = scenario_defaults(scenario)
    for key in ("c", "f_c", "f_s", "beta", "q", "prefix_mode", "n_list", "m_list",
                "vmax", "realizations", "seed", "delay_spread_ns", "dse",
                "baseline_sync", "out"):
        if key in file_doc:
            setattr(sc, key, file_doc[key])
    if args.m_list:
        sc.m_list = _parse_int_list(args.m_list)
    if args.n_list:
        sc.n_list = _parse_int_list(args.n_list)
    if args.vmax:
        sc.vmax = _parse_float_list(args.vmax)
    for key in ("realizations", "seed", "delay_spread_ns", "dse", "out",
                "baseline_sync", "q"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(sc, key, val)
    return sc


def build_parser() -> _Parser:
    parser = _Parser(prog="oddmsquint",
                     description="Wideband delay-Doppler channel experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("impulse", parents=[], help="received DD magnitude maps "
                       "for a single-path impulse")
    _add_common(p)
    p = sub.add_parser("nmse-sweep", help="modeling NMSE over the v_max grid")
    _add_common(p)
    p = sub.add_parser("oracle-check", help="cross-validate all propagation "
                       "routes on a small frame")
    _add_common(p)
    p.add_argument("--corrupt-kernel", action="store_true",
                   help=argparse.SUPPRESS)
    p = sub.add_parser("gen-channel", help="dump one channel realization to JSON")
    _add_common(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        # the impulse experiment is defined on the underwater setup
        default_scenario = "type2" if args.command == "impulse" else "type1"
        sc = resolve_config(args, default_scenario)
        if args.command == "impulse":
            M = sc.m_list[0] if args.m_list else 128
            N = sc.n_list[0] if args.n_list else 32
            v = sc.vmax[0] if args.vmax else 1.0
            written = run_impulse(sc, M, N, v)
            for path in written:
                print(path)
        elif args.command == "nmse-sweep":
            rows = run_nmse_sweep(sc)
            print(f"{len(rows)} sweep points -> {sc.out or 'nmse_sweep.csv'}")
        elif args.command == "oracle-check":
            M = sc.m_list[0] if args.m_list else 32
            N = sc.n_list[0] if args.n_list else 8
            if M > 64 or N > 16:
                raise UsageError("oracle-check runs on small frames (M <= 64, N <= 16)")
            report = run_oracle_check(sc, M=M, N=N,
                                      corrupt=getattr(args, "corrupt_kernel", False))
            text = json.dumps(report, indent=2)
            if sc.out:
                with open(sc.out, "w") as fh:
                    fh.write(text + "\n")
            else:
                print(text)
            if not report["pass"]:
                return 3
        elif args.command == "gen-channel":
            cfg = frame_config(sc, sc.m_list[0], sc.n_list[0])
            v_si = vmax_to_si(sc, sc.vmax[0] if args.vmax else sc.vmax[-1])
            ch = draw_channel(sc, cfg, v_si, sc.seed)
            path = sc.out or "channel.json"
            save_channel(ch, path)
            print(path)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleConfigError as exc:
        print(f"infeasible configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
