"""Command-line front end: config parsing, experiment dispatch, CSV emission.

Config files are flat ``key = value`` text with ``#`` comments.  Two named
profiles ship: ``desk`` (fast, CI-sized) and ``paper`` (full-scale Table-1
geometry).  Resolution order: profile defaults, then config file, then
``CPSOTFS_<KEY>`` environment variables, then command-line flags.  Every
run writes a manifest echoing the resolved configuration.

Exit codes: 0 success, 1 invariant failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from dataclasses import dataclass, field
from importlib import metadata as _metadata
from pathlib import Path

import numpy as np

from . import channel, metrics, modem, pulse, transforms
from .params import OtfsParams, permutation_indices

ENV_PREFIX = "CPSOTFS_"

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2

try:
    __version__ = _metadata.version("cpsotfs")
except _metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0+src"


class ConfigError(ValueError):
    pass


def _parse_guard(text: str) -> frozenset[int]:
    """Parse '0-15,48-63' style 0-indexed inclusive ranges."""
    out: set[int] = set()
    text = text.strip()
    if not text:
        return frozenset()
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.update(range(int(lo), int(hi) + 1))
        else:
            out.add(int(part))
    return frozenset(out)


def _guard_str(guard: frozenset[int]) -> str:
    if not guard:
        return ""
    vals = sorted(guard)
    runs = []
    start = prev = vals[0]
    for v in vals[1:]:
        if v == prev + 1:
            prev = v
            continue
        runs.append((start, prev))
        start = prev = v
    runs.append((start, prev))
    return ",".join(f"{a}-{b}" if a != b else f"{a}" for a, b in runs)


@dataclass
class ExperimentConfig:
    """Resolved experiment configuration (all Table-1 knobs plus budgets)."""

    M: int = 64
    N: int = 16
    delta_f: float = 15e3
    alpha_prime: int = 8
    qam_order: int = 4
    carrier_freq: float = 4e9
    speed_kmh: float = 500.0
    guard_set: frozenset[int] = field(default_factory=frozenset)
    waveforms: tuple[str, ...] = metrics.WAVEFORMS
    seed: int = 1
    snr_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    psd_frames: int = 500
    papr_trials: int = 20000
    ber_target_errors: int = 200
    ber_max_frames: int = 200
    nfft: int = 0  # 0 -> auto
    identity_channel: bool = False
    use_printed_permutation: bool = False
    out_dir: str = "out"

    def otfs_params(self) -> OtfsParams:
        try:
            return OtfsParams(
                M=self.M,
                N=self.N,
                delta_f=self.delta_f,
                alpha_prime=self.alpha_prime,
                qam_order=self.qam_order,
                guard_set=self.guard_set,
                carrier_freq=self.carrier_freq,
                speed=self.speed_kmh / 3.6,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def manifest_lines(self) -> list[str]:
        lines = [f"version = {__version__}"]
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "guard_set":
                v = _guard_str(v)
            elif isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return lines


# Guard sets are stored 0-indexed; the published table's 1-based inclusive
# ranges [1,128] and [384,512] become [0,127] and [383,511].
PROFILES: dict[str, dict[str, str]] = {
    "desk": {},
    "paper": {
        "M": "512",
        "N": "127",
        "alpha_prime": "64",
        "guard_set": "0-127,383-511",
        "psd_frames": "200",
        "ber_max_frames": "20",
    },
}


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce(cfg: ExperimentConfig, key: str, value: str) -> None:
    if not hasattr(cfg, key):
        raise ConfigError(f"unknown config key {key!r}")
    current = getattr(cfg, key)
    try:
        if key == "guard_set":
            setattr(cfg, key, _parse_guard(value))
        elif key == "waveforms":
            wfs = tuple(w.strip() for w in value.split(",") if w.strip())
            for w in wfs:
                if w not in metrics.WAVEFORMS:
                    raise ConfigError(f"unknown waveform {w!r}")
            setattr(cfg, key, wfs)
        elif key == "snr_db":
            setattr(cfg, key, tuple(float(v) for v in value.split(",") if v.strip()))
        elif isinstance(current, bool):
            setattr(cfg, key, _BOOL[value.lower()])
        elif isinstance(current, int):
            setattr(cfg, key, int(value))
        elif isinstance(current, float):
            setattr(cfg, key, float(value))
        else:
            setattr(cfg, key, value)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from exc


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.profile == "desk":
        cfg.guard_set = _parse_guard("0-15,48-63")
    for key, value in PROFILES[args.profile].items():
        _coerce(cfg, key, value)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        for key, value in parse_config_text(path.read_text(encoding="utf-8")).items():
            _coerce(cfg, key, value)
    for f in dataclasses.fields(ExperimentConfig):
        env = os.environ.get(ENV_PREFIX + f.name.upper())
        if env is not None:
            _coerce(cfg, f.name, env)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    cfg.otfs_params()  # validate early
    return cfg


def _prepare_out(cfg: ExperimentConfig, command: str) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / f"manifest_{command}.txt"
    manifest.write_text(
        "\n".join([f"command = {command}"] + cfg.manifest_lines()) + "\n",
        encoding="utf-8",
    )
    return out


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _run_checks(cfg: ExperimentConfig) -> list[tuple[str, bool, str]]:
    checks: list[tuple[str, bool, str]] = []
    sizes = [(2, 2), (2, 3), (4, 4), (4, 3), (8, 4)]
    rng = np.random.default_rng(cfg.seed)

    # permutation bijectivity (honors the printed-formula negative control)
    ok = True
    detail = ""
    for M, N in sizes + [(cfg.M, cfg.N)]:
        pi = permutation_indices(M, N, cfg.use_printed_permutation)
        if sorted(pi.tolist()) != list(range(M * N)):
            ok = False
            detail = f"pi not a bijection at M={M}, N={N}"
            break
    checks.append(("permutation bijectivity", ok, detail or "all sizes"))

    for M, N in sizes:
        MN = M * N
        add = transforms.build_a_dd(M, N)
        err = np.abs(add @ add.conj().T - np.eye(MN)).max()
        checks.append(
            (f"A_DD unitarity M={M} N={N}", err < 1e-10, f"max err {err:.2e} (tol 1e-10)")
        )
        for make in (pulse.rect_pulse, pulse.dirichlet_pulse):
            g = make(M, N)
            lam = transforms.characteristic_diagonal(g.samples, M, N)
            try:
                lam_o = transforms.oracle_characteristic_diagonal(g.samples, M, N)
                err = np.abs(lam - lam_o).max()
                ok = err < 1e-10
                detail = f"max err {err:.2e} (tol 1e-10)"
            except transforms.StructureError as exc:
                ok = False
                detail = str(exc)
            checks.append((f"factorization oracle {g.label} M={M} N={N}", ok, detail))
            dev = np.abs(np.abs(lam) - 1.0).max()
            checks.append(
                (f"CMCM {g.label} M={M} N={N}", dev < 1e-9, f"max dev {dev:.2e} (tol 1e-9)")
            )

    # perfect reconstruction, full chain, both pulses
    M, N = min(cfg.M, 16), min(cfg.N, 8)
    MN = M * N
    for make in (pulse.rect_pulse, pulse.dirichlet_pulse):
        g = make(M, N)
        lam = transforms.characteristic_diagonal(g.samples, M, N)
        op = transforms.ModulationOperator(lam, M, N)
        bad = 0
        for _ in range(20):
            bits = rng.integers(0, 2, MN * modem.bits_per_symbol(cfg.qam_order))
            d = modem.qam_map(bits, cfg.qam_order)
            s, _ = modem.modulate_fast(d, lam, M, N)
            r = modem.remove_cp(modem.add_cp_window(s, min(cfg.alpha_prime, MN)), min(cfg.alpha_prime, MN))
            d_hat = op.apply_adjoint(r)
            bad += int(np.sum(modem.qam_demap(d_hat, cfg.qam_order) != bits))
        checks.append(
            (f"perfect reconstruction {g.label} M={M} N={N}", bad == 0, f"{bad} bit errors")
        )

    # two-stage vs full LMMSE on random small channels
    M, N = 8, 8
    MN = M * N
    g = pulse.dirichlet_pulse(M, N)
    lam = transforms.characteristic_diagonal(g.samples, M, N)
    op = transforms.ModulationOperator(lam, M, N)
    A = op.dense()
    worst = 0.0
    for _ in range(10):
        paths = channel.PathSet(
            rng.standard_normal(3) + 1j * rng.standard_normal(3),
            rng.integers(0, 4, 3),
            rng.integers(-2, 3, 3),
        )
        H = channel.build_channel_matrix(paths, MN)
        r = rng.standard_normal(MN) + 1j * rng.standard_normal(MN)
        full = modem.lmmse_full(r, H, A, 0.1)
        two = modem.lmmse_two_stage(r, H, op, 0.1)
        worst = max(worst, float(np.abs(full - two).max()))
    checks.append(
        ("two-stage equals full LMMSE", worst < 1e-8, f"max err {worst:.2e} (tol 1e-8)")
    )
    return checks


def cmd_verify(cfg: ExperimentConfig) -> int:
    _prepare_out(cfg, "verify")
    failures = 0
    for name, ok, detail in _run_checks(cfg):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failures += 0 if ok else 1
    print(f"verify: {failures} failure(s)")
    return EXIT_OK if failures == 0 else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def cmd_psd(cfg: ExperimentConfig, tone_bin: int | None = None) -> int:
    out = _prepare_out(cfg, "psd")
    records = []
    oob = {}
    for wf in cfg.waveforms:
        res = metrics.measure_psd(
            cfg.M,
            cfg.N,
            cfg.alpha_prime,
            wf,
            cfg.guard_set,
            cfg.qam_order,
            frames=cfg.psd_frames,
            nfft=cfg.nfft or None,
            seed=cfg.seed,
            tone_bin=tone_bin,
        )
        records.extend(res.records())
        oob[wf] = res.oob_mean_db
    path = out / "psd.csv"
    metrics.write_records(path, records)
    for wf, v in oob.items():
        print(f"psd: {wf} guard-band mean = {v:.2f} dB")
    if "RPS-OTFS" in oob and "CDPS-OTFS" in oob:
        print(f"psd: OoB delta (RPS - CDPS) = {oob['RPS-OTFS'] - oob['CDPS-OTFS']:.2f} dB")
    print(f"psd: wrote {path}")
    return EXIT_OK


def cmd_papr(cfg: ExperimentConfig) -> int:
    out = _prepare_out(cfg, "papr")
    records = []
    quantiles = {}
    for wf in cfg.waveforms:
        res = metrics.measure_papr(
            cfg.M, cfg.N, wf, cfg.qam_order, trials=cfg.papr_trials, seed=cfg.seed
        )
        records.extend(res.records())
        quantiles[wf] = res.ccdf_inverse(1e-2)
    path = out / "papr.csv"
    metrics.write_records(path, records)
    for wf, v in quantiles.items():
        print(f"papr: {wf} CCDF^-1(1e-2) = {v:.2f} dB")
    if "RPS-OTFS" in quantiles and "CDPS-OTFS" in quantiles:
        gap = quantiles["RPS-OTFS"] - quantiles["CDPS-OTFS"]
        print(f"papr: gap at 1e-2 (RPS - CDPS) = {gap:.2f} dB")
    print(f"papr: wrote {path}")
    return EXIT_OK


def cmd_ber(cfg: ExperimentConfig) -> int:
    out = _prepare_out(cfg, "ber")
    try:
        results = metrics.run_ber(
            cfg.otfs_params(),
            list(cfg.snr_db),
            master_seed=cfg.seed,
            waveforms=cfg.waveforms,
            target_errors=cfg.ber_target_errors,
            max_frames=cfg.ber_max_frames,
            identity_channel=cfg.identity_channel,
        )
    except channel.ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    records = []
    for res in results:
        records.extend(res.records())
    path = out / "ber.csv"
    metrics.write_records(path, records)
    header = "SNR(dB)  " + "  ".join(f"{wf:>10s}" for wf in cfg.waveforms)
    print(header)
    for i, snr in enumerate(cfg.snr_db):
        row = f"{snr:7.1f}  " + "  ".join(
            f"{res.points[i].ber:10.3e}" for res in results
        )
        print(row)
    print(f"ber: wrote {path}")
    return EXIT_OK


def cmd_pulse_dump(cfg: ExperimentConfig) -> int:
    out = _prepare_out(cfg, "pulse-dump")
    for make in (pulse.rect_pulse, pulse.dirichlet_pulse):
        g = make(cfg.M, cfg.N)
        path = out / f"pulse_{g.label}.csv"
        pulse.pulse_to_csv(g, path)
        print(f"pulse-dump: wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpsotfs",
        description="Circularly pulse shaped OTFS link-level simulator",
    )
    parser.add_argument("--config", metavar="PATH", help="flat key = value config file")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--out", metavar="DIR", default=None, help="output directory")
    parser.add_argument(
        "--profile", choices=sorted(PROFILES), default="desk", help="parameter profile"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", help="run the invariant suite")
    p_psd = sub.add_parser("psd", help="out-of-band PSD comparison")
    p_psd.add_argument(
        "--tone", type=int, default=None, help="calibration: transmit a pure tone at this subcarrier"
    )
    sub.add_parser("papr", help="PAPR CCDF comparison")
    sub.add_parser("ber", help="Monte Carlo BER curves")
    sub.add_parser("pulse-dump", help="export prototype pulses as CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "psd":
            return cmd_psd(cfg, tone_bin=args.tone)
        if args.command == "papr":
            return cmd_papr(cfg)
        if args.command == "ber":
            return cmd_ber(cfg)
        if args.command == "pulse-dump":
            return cmd_pulse_dump(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
