"""Command-line client for the exact engine.

Every command is a thin client of the HTTP service: by default the
FastAPI application is called in-process (no socket), and ``--server``
points the same commands at a remote instance instead.  Outputs are CSV
or JSON with lossless number formatting, so identical configuration and
seed produce byte-identical files.

Exit codes: 0 on success, 1 on an internal failure (including a FAIL
verification verdict), 2 on bad user input.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys
from typing import Sequence

import httpx

from . import __version__
from .serialize import real_str, rows_to_csv, matrix_csv, trajectory_csv

_TIMEOUT = 600.0


class UserInputError(Exception):
    """Bad arguments or files; maps to exit code 2."""


def parse_t_grid(text: str) -> list[float]:
    """A time grid, either ``a,b,c`` values or ``start:stop:count``."""
    try:
        if ":" in text:
            lo_s, hi_s, num_s = text.split(":")
            lo, hi, num = float(lo_s), float(hi_s), int(num_s)
            if num < 1:
                raise ValueError
            if num == 1:
                grid = [lo]
            else:
                step = (hi - lo) / (num - 1)
                grid = [lo + i * step for i in range(num)]
                grid[-1] = hi
        else:
            grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UserInputError(
            f"bad t-grid {text!r}: use comma values '0,0.5,1' or 'start:stop:count'"
        ) from None
    if not grid:
        raise UserInputError("t-grid is empty")
    if any(t < 0 for t in grid):
        raise UserInputError("t-grid times must be nonnegative")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UserInputError("t-grid must be strictly increasing")
    return grid


def _read_file(path: str, what: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise UserInputError(f"cannot read {what} {path!r}: {exc}") from None


def call_service(server: str | None, path: str, payload: dict | None) -> dict:
    """POST to the service (GET when payload is None) and return its JSON.

    Without ``--server`` the application object is invoked in-process.
    """
    if server:
        try:
            with httpx.Client(base_url=server, timeout=_TIMEOUT) as client:
                response = (
                    client.get(path)
                    if payload is None
                    else client.post(path, json=payload)
                )
        except httpx.HTTPError as exc:
            raise UserInputError(f"cannot reach server {server!r}: {exc}") from None
    else:
        from .service import app

        async def _go() -> httpx.Response:
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://recomb.internal",
                timeout=_TIMEOUT,
            ) as client:
                if payload is None:
                    return await client.get(path)
                return await client.post(path, json=payload)

        response = asyncio.run(_go())

    if response.status_code in (400, 422):
        detail = response.json().get("detail", response.text)
        raise UserInputError(f"{detail}")
    if response.status_code != 200:
        raise RuntimeError(f"service error {response.status_code}: {response.text}")
    return response.json()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _as_json(data: dict) -> str:
    return json.dumps(data, indent=2) + "\n"


def _fmt(args: argparse.Namespace, default: str = "csv") -> str:
    return args.format or default


# -- commands ---------------------------------------------------------------------


def cmd_enumerate(args: argparse.Namespace) -> int:
    data = call_service(
        args.server, "/api/enumerate", {"n": args.n, "lattice": args.lattice}
    )
    if _fmt(args) == "json":
        _emit(_as_json(data), args.out)
        return 0
    up: dict[int, list[int]] = {}
    for low, high in data["covers"]:
        up.setdefault(low, []).append(high)
    rows = [
        {
            "index": i,
            "partition": name,
            "blocks": data["blocks"][i],
            "covers_above": ";".join(str(j) for j in sorted(up.get(i, []))),
        }
        for i, name in enumerate(data["elements"])
    ]
    _emit(rows_to_csv(["index", "partition", "blocks", "covers_above"], rows), args.out)
    return 0


def cmd_rates(args: argparse.Namespace) -> int:
    payload = {"rate_file": _read_file(args.rates, "rate file")}
    data = call_service(args.server, "/api/rates", payload)
    if _fmt(args) == "json":
        _emit(_as_json(data), args.out)
    else:
        _emit(
            rows_to_csv(
                ["subsystem", "partition", "rho", "psi", "chi", "psi_minus_chi"],
                data["rows"],
            ),
            args.out,
        )
    return 0


def _cmd_matrix(endpoint: str):
    def run(args: argparse.Namespace) -> int:
        payload = {"rate_file": _read_file(args.rates, "rate file")}
        data = call_service(args.server, f"/api/{endpoint}", payload)
        if _fmt(args) == "json":
            _emit(_as_json(data), args.out)
        else:
            _emit(matrix_csv(data), args.out)
        return 0

    return run


def cmd_solve(args: argparse.Namespace) -> int:
    payload: dict = {
        "rate_file": _read_file(args.rates, "rate file"),
        "t_grid": parse_t_grid(args.t_grid),
    }
    if args.omega0:
        raw = _read_file(args.omega0, "tensor file")
        try:
            tensor = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise UserInputError(f"bad tensor file {args.omega0!r}: {exc}") from None
        payload["omega0"] = tensor
    data = call_service(args.server, "/api/solve", payload)
    if _fmt(args) == "json":
        _emit(_as_json(data), args.out)
    else:
        _emit(
            trajectory_csv(data["times"], data["columns"], data["rows"]), args.out
        )
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    payload = {
        "rate_file": _read_file(args.rates, "rate file"),
        "t_grid": parse_t_grid(args.t_grid),
        "dt": args.dt,
        "seed": args.seed,
    }
    data = call_service(args.server, "/api/verify", payload)
    if _fmt(args, "json") == "csv":
        rows = [
            {
                "name": c["name"],
                "passed": str(c["passed"]).lower(),
                "seconds": real_str(c["seconds"]),
                "detail": c["detail"],
            }
            for c in data["checks"]
        ]
        _emit(rows_to_csv(["name", "passed", "seconds", "detail"], rows), args.out)
    else:
        _emit(_as_json(data), args.out)
    status_line = (
        f"{data['status']}: {sum(c['passed'] for c in data['checks'])}"
        f"/{len(data['checks'])} checks, classification {data['classification']}"
    )
    print(status_line, file=sys.stderr)
    return 0 if data["status"] == "PASS" else 1


def cmd_simulate(args: argparse.Namespace) -> int:
    payload = {
        "rate_file": _read_file(args.rates, "rate file"),
        "t_grid": parse_t_grid(args.t_grid),
        "samples": args.samples,
        "seed": args.seed,
    }
    data = call_service(args.server, "/api/simulate", payload)
    if _fmt(args) == "json":
        _emit(_as_json(data), args.out)
    else:
        rows = [
            {
                "t": real_str(r["t"]),
                "partition": r["partition"],
                "empirical": real_str(r["empirical"]),
                "analytic": real_str(r["analytic"]),
                "sigma": real_str(r["sigma"]),
                "z": real_str(r["z"]),
            }
            for r in data["rows"]
        ]
        _emit(
            rows_to_csv(
                ["t", "partition", "empirical", "analytic", "sigma", "z"], rows
            ),
            args.out,
        )
    print(
        f"samples={data['samples']} seed={data['seed']} "
        f"max_z={data['max_z']:.3f} within_4_sigma={data['within_four_sigma']}",
        file=sys.stderr,
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recomb",
        description="Exact recombination dynamics on partition lattices.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--server",
        default=None,
        help="URL of a running service; defaults to calling in-process",
    )
    common.add_argument(
        "--format",
        choices=("csv", "json"),
        default=None,
        help="output format (default csv; json for verify)",
    )
    common.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser(
        "enumerate", parents=[common], help="list a lattice and its cover relations"
    )
    p.add_argument("--n", type=int, required=True, help="number of sites")
    p.add_argument(
        "--lattice",
        choices=("interval", "full"),
        default="interval",
        help="lattice kind",
    )
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser(
        "rates",
        parents=[common],
        help="per-subsystem table of marginal and decay rates",
    )
    p.add_argument("--rates", required=True, help="rate file path")
    p.set_defaults(func=cmd_rates)

    for name, title in (
        ("theta", "solution coefficient matrix"),
        ("eta", "inverse coefficient matrix"),
        ("q", "Markov generator matrix"),
    ):
        p = sub.add_parser(name, parents=[common], help=title)
        p.add_argument("--rates", required=True, help="rate file path")
        p.set_defaults(func=_cmd_matrix(name))

    p = sub.add_parser(
        "solve",
        parents=[common],
        help="closed-form coefficient trajectory (and evolved tensor)",
    )
    p.add_argument("--rates", required=True, help="rate file path")
    p.add_argument(
        "--t-grid",
        required=True,
        help="times: comma values '0,0.5,1' or 'start:stop:count'",
    )
    p.add_argument(
        "--omega0",
        default=None,
        help="JSON tensor file {\"shape\": [...], \"values\": [...]}",
    )
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser(
        "verify", parents=[common], help="run the invariant suite on a rate file"
    )
    p.add_argument("--rates", required=True, help="rate file path")
    p.add_argument("--t-grid", default="0.5,1", help="times for numeric cross-checks")
    p.add_argument("--dt", type=float, default=1e-3, help="integrator step size")
    p.add_argument("--seed", type=int, default=0, help="seed for the random tensor")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser(
        "simulate",
        parents=[common],
        help="empirical vs analytic law of the jump process",
    )
    p.add_argument("--rates", required=True, help="rate file path")
    p.add_argument("--t-grid", required=True, help="comparison times")
    p.add_argument("--samples", type=int, required=True, help="number of samples")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1", help="bind address")
    p.add_argument("--port", type=int, default=8000, help="port")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UserInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:  # pragma: no cover
        return 1
    except Exception as exc:  # pragma: no cover - internal failures
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
