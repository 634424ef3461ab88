"""Command line front end.

The CLI is a thin client over the experiment commands. By default it runs
them in process; with --server URL it posts the same request body to a
running service instance and consumes the JSON response. Either way the
artifacts end up as files under --out-dir, byte identical between the two
transports.

Option precedence: command line flags beat config file entries beat package
defaults. The config file is plain key=value lines (same names as the long
flags, dashes or underscores), '#' starts a comment.

Exit codes: 0 success, 1 command reported failure (or server error),
2 usage, validation, or input format errors.
"""

from __future__ import annotations

import argparse
import base64
import json
import os
import sys

from pydantic import ValidationError

from .pgm import PgmFormatError
from .scene import SceneFormatError
from .schemas import (
    CommandResponse,
    NoiseSpec,
    PercentileCurveRequest,
    PixelMapRequest,
    RatioCurveRequest,
    RunOnceRequest,
    SceneSpec,
    SweepRequest,
    VerifyRequest,
)
from . import experiments

COMMANDS = (
    "verify",
    "sweep-resolution",
    "ratio-curve",
    "pixel-map",
    "percentile-curve",
    "run-once",
)

_SYNTH_CHOICES = ("uniform", "point")
_ARCH_CHOICES = ("lci", "pai", "lai")
_ADDITIVE_CHOICES = ("gaussian", "uniform", "none")

# config file value parsers, keyed by argparse dest
_INT_KEYS = {"n", "trials", "seed", "mc_cap", "workers", "position"}
_FLOAT_KEYS = {
    "x0",
    "sigma",
    "rho",
    "gain",
    "background",
    "peak",
    "avg_photons",
    "delta_t",
    "poisson_approx_threshold",
}
_BOOL_KEYS = {"self_test", "no_mc", "additive_on_dark"}
_CHOICE_KEYS = {
    "synthetic": _SYNTH_CHOICES,
    "arch": _ARCH_CHOICES,
    "additive_kind": _ADDITIVE_CHOICES,
}
_LIST_INT_KEYS = {"n_list"}
_LIST_FLOAT_KEYS = {"abscissas"}
_STR_KEYS = {"out_dir", "server"}
_PATH_LIST_KEYS = {"scene"}


class CliError(Exception):
    """Bad input that maps to exit code 2."""


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise CliError(f"expected comma separated integers, got {text!r}") from exc


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise CliError(f"expected comma separated numbers, got {text!r}") from exc


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise CliError(f"expected a boolean, got {text!r}")


def _convert_config_value(key: str, raw: str):
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError as exc:
            raise CliError(f"config key {key}: expected integer, got {raw!r}") from exc
    if key in _FLOAT_KEYS:
        try:
            return float(raw)
        except ValueError as exc:
            raise CliError(f"config key {key}: expected number, got {raw!r}") from exc
    if key in _BOOL_KEYS:
        return _parse_bool(raw)
    if key in _CHOICE_KEYS:
        if raw not in _CHOICE_KEYS[key]:
            raise CliError(f"config key {key}: must be one of {_CHOICE_KEYS[key]}, got {raw!r}")
        return raw
    if key in _LIST_INT_KEYS:
        return _parse_int_list(raw)
    if key in _LIST_FLOAT_KEYS:
        return _parse_float_list(raw)
    if key in _PATH_LIST_KEYS:
        return [tok.strip() for tok in raw.split(",") if tok.strip()]
    if key in _STR_KEYS:
        return raw
    raise CliError(f"unknown config key: {key}")


def load_config(path: str) -> dict:
    """Parse a key=value config file into typed values."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from exc
    values: dict = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise CliError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip().replace("-", "_")
        values[key] = _convert_config_value(key, raw.strip())
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lcisim",
        description="Photon noise SNR experiments for coded, pinhole, and lens cameras.",
    )
    p.add_argument("--cmd", required=True, choices=COMMANDS, help="command to run")
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--server", help="base URL of a running service; default runs in process")
    p.add_argument("--out-dir", dest="out_dir", help="directory for artifact files (default .)")

    p.add_argument("--scene", action="append", help="scene image file (PGM or CSV); repeatable")
    p.add_argument("--synthetic", choices=_SYNTH_CHOICES, help="synthetic scene kind (default uniform)")
    p.add_argument("--n", type=int, help="vector length for synthetic scenes and ratio curves")
    p.add_argument("--n-list", dest="n_list", help="comma separated vector lengths")
    p.add_argument("--x0", type=float, help="total scene brightness in photons")
    p.add_argument("--background", type=float, help="point scene background level")
    p.add_argument("--peak", type=float, help="point scene peak level")
    p.add_argument("--position", type=int, help="point scene peak pixel index")
    p.add_argument("--avg-photons", dest="avg_photons", type=float,
                   help="mean photons per pixel for file scenes")

    p.add_argument("--sigma", type=float, help="coded architecture additive noise std")
    p.add_argument("--rho", type=float, help="direct architecture additive noise std")
    p.add_argument("--gain", type=float, help="lens architecture light gain (>= 1)")
    p.add_argument("--additive-kind", dest="additive_kind", choices=_ADDITIVE_CHOICES,
                   help="additive noise law")
    p.add_argument("--additive-on-dark", dest="additive_on_dark", action="store_true",
                   default=None, help="apply additive noise to dark and padding pixels too")
    p.add_argument("--poisson-approx-threshold", dest="poisson_approx_threshold", type=float,
                   help="means above this use a normal approximation")

    p.add_argument("--arch", choices=_ARCH_CHOICES, help="architecture for run-once")
    p.add_argument("--trials", type=int, help="Monte Carlo trial count")
    p.add_argument("--seed", type=int, help="base seed for all streams")
    p.add_argument("--mc-cap", dest="mc_cap", type=int,
                   help="largest N simulated in sweeps; above it only closed forms")
    p.add_argument("--abscissas", help="comma separated noise scale points for ratio-curve")
    p.add_argument("--no-mc", dest="no_mc", action="store_true", default=None,
                   help="skip Monte Carlo columns in ratio-curve")
    p.add_argument("--delta-t", dest="delta_t", type=float, help="exposure slot duration")
    p.add_argument("--workers", type=int, help="parallel simulation processes")
    p.add_argument("--self-test", dest="self_test", action="store_true", default=None,
                   help="verify only: include a corrupted control row that must fail")
    return p


class Options:
    """Merged view over flags and config with flags winning."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self._args = args
        self._config = config

    def get(self, key: str, default=None):
        flag = getattr(self._args, key, None)
        if flag is not None:
            return flag
        if key in self._config:
            return self._config[key]
        return default

    def put_if_set(self, payload: dict, field: str, key: str | None = None) -> None:
        value = self.get(key or field)
        if value is not None:
            payload[field] = value


def _scene_spec_from_file(path: str, opts: Options) -> dict:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read scene file {path}: {exc}") from exc
    spec = {
        "kind": "file",
        "filename": os.path.basename(path),
        "content_b64": base64.b64encode(blob).decode("ascii"),
    }
    if opts.get("avg_photons") is not None:
        spec["avg_photons"] = opts.get("avg_photons")
    return spec


def _synthetic_scene_spec(opts: Options) -> dict:
    spec = {"kind": opts.get("synthetic", "uniform")}
    for field in ("n", "x0", "background", "peak", "position"):
        value = opts.get(field)
        if value is not None:
            spec[field] = value
    return spec


def _scene_specs(opts: Options) -> list[dict]:
    paths = opts.get("scene")
    if paths:
        return [_scene_spec_from_file(path, opts) for path in paths]
    return [_synthetic_scene_spec(opts)]


def _noise_spec(opts: Options) -> dict:
    spec: dict = {}
    for field in ("sigma", "rho", "gain", "additive_kind", "poisson_approx_threshold",
                  "additive_on_dark"):
        value = opts.get(field)
        if value is not None:
            spec[field] = value
    return spec


def build_request(cmd: str, opts: Options):
    """Assemble the typed request for a command from merged options."""
    if cmd == "verify":
        payload: dict = {}
        if opts.get("n_list") is not None:
            payload["n_list"] = opts.get("n_list")
        opts.put_if_set(payload, "seed")
        opts.put_if_set(payload, "self_test")
        return VerifyRequest(**payload)
    if cmd == "sweep-resolution":
        payload = {"noise": _noise_spec(opts)}
        for field in ("n_list", "x0", "trials", "seed", "mc_cap", "workers"):
            opts.put_if_set(payload, field)
        return SweepRequest(**payload)
    if cmd == "ratio-curve":
        payload = {}
        for field in ("abscissas", "n", "x0", "sigma", "trials", "seed", "workers"):
            opts.put_if_set(payload, field)
        if opts.get("no_mc"):
            payload["mc"] = False
        return RatioCurveRequest(**payload)
    if cmd == "pixel-map":
        scenes = _scene_specs(opts)
        if len(scenes) != 1:
            raise CliError("pixel-map takes exactly one scene")
        payload = {"scene": scenes[0]}
        opts.put_if_set(payload, "seed")
        return PixelMapRequest(**payload)
    if cmd == "percentile-curve":
        payload = {"scenes": _scene_specs(opts)}
        opts.put_if_set(payload, "seed")
        return PercentileCurveRequest(**payload)
    if cmd == "run-once":
        scenes = _scene_specs(opts)
        if len(scenes) != 1:
            raise CliError("run-once takes exactly one scene")
        payload = {
            "architecture": opts.get("arch", "lci"),
            "scene": scenes[0],
            "noise": _noise_spec(opts),
        }
        for field in ("trials", "seed", "delta_t", "workers"):
            opts.put_if_set(payload, field)
        return RunOnceRequest(**payload)
    raise CliError(f"unknown command: {cmd}")


_LOCAL_RUNNERS = {
    "verify": experiments.run_verify,
    "sweep-resolution": experiments.run_sweep,
    "ratio-curve": experiments.run_ratio_curve,
    "pixel-map": experiments.run_pixel_map,
    "percentile-curve": experiments.run_percentile_curve,
    "run-once": experiments.run_once,
}


def dispatch(cmd: str, request, server: str | None, http_client=None) -> CommandResponse:
    """Run locally, or post to a service when a server or client is given."""
    if server is None and http_client is None:
        return _LOCAL_RUNNERS[cmd](request)
    if http_client is None:
        import httpx

        http_client = httpx.Client(base_url=server, timeout=600.0)
    resp = http_client.post(f"/{cmd}", json=request.model_dump(mode="json"))
    if resp.status_code in (400, 422):
        raise CliError(f"server rejected request ({resp.status_code}): {resp.text}")
    if resp.status_code != 200:
        raise RuntimeError(f"server error {resp.status_code}: {resp.text}")
    return CommandResponse(**resp.json())


def write_artifacts(response: CommandResponse, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for artifact in response.artifacts:
        path = os.path.join(out_dir, artifact.name)
        if artifact.text is not None:
            data = artifact.text.encode("utf-8")
        elif artifact.content_b64 is not None:
            data = base64.b64decode(artifact.content_b64)
        else:
            continue
        with open(path, "wb") as fh:
            fh.write(data)
        written.append(path)
    return written


def main(argv=None, http_client=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.n_list is not None:
            args.n_list = _parse_int_list(args.n_list)
        if args.abscissas is not None:
            args.abscissas = _parse_float_list(args.abscissas)
        config = load_config(args.config) if args.config else {}
        opts = Options(args, config)
        request = build_request(args.cmd, opts)
        response = dispatch(args.cmd, request, opts.get("server"), http_client)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: invalid request: {exc}", file=sys.stderr)
        return 2
    except (SceneFormatError, PgmFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    for path in write_artifacts(response, opts.get("out_dir", ".")):
        print(f"wrote {path}")
    print(json.dumps(response.report, indent=2, sort_keys=True))
    return 0 if response.status == "ok" else 1


if __name__ == "__main__":
    sys.exit(main())
