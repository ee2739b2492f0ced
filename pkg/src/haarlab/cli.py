"""Command-line interface: a thin client over the HTTP service.

All subcommands speak the service wire format; by default the app is
mounted in-process, and ``--url`` points them at a remote server instead.
``experiment run`` persists records.csv + manifest.json to the config's
output directory and exits 0 exactly when the verdict passes.
"""

from __future__ import annotations

import argparse
import base64
import json
import sys
from pathlib import Path

from .service.client import ServiceClient

EXIT_FAIL_VERDICT = 3


def _float_pairs(values):
    out = []
    for token in values:
        re_part, _, im_part = token.partition(",")
        out.append((float(re_part), float(im_part or 0.0)))
    return out


def _write(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text)


def cmd_sample(client: ServiceClient, args) -> int:
    diagonal = _float_pairs(args.diagonal) if args.diagonal else None
    result = client.sample(
        kind=args.kind,
        dimension=args.dim,
        seed={"master": args.master, "stream": args.stream},
        diagonal=diagonal,
        include_matrix=bool(args.out or args.csv),
        matrix_format="csv" if args.csv and not args.out else "npz",
    )
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_bytes(base64.b64decode(result["matrix_npz_b64"]))
    if args.csv:
        if result.get("matrix_csv") is None:
            from .matio import matrix_from_npz_bytes, save_matrix_csv

            matrix = matrix_from_npz_bytes(base64.b64decode(result["matrix_npz_b64"]))
            save_matrix_csv(matrix, args.csv)
        else:
            _write(args.csv, result["matrix_csv"])
    trace = result["normalized_trace"]
    print(
        f"{args.kind} N={result['dimension']} flags={','.join(result['flags']) or '-'} "
        f"norm={result['operator_norm']:.6f} trace={trace[0]:.6f}{trace[1]:+.6f}i"
    )
    return 0


def cmd_spectrum(client: ServiceClient, args) -> int:
    payload = {"ordering": args.ordering}
    if args.matrix:
        payload["matrix_npz_b64"] = base64.b64encode(Path(args.matrix).read_bytes()).decode()
    else:
        payload["sample"] = {
            "kind": args.kind,
            "dimension": args.dim,
            "seed": {"master": args.master, "stream": args.stream},
        }
    result = client.spectrum(**payload)
    if args.out:
        lines = [f"{re!r},{im!r}" for re, im in result["eigenvalues"]]
        _write(args.out, "\n".join(lines) + "\n")
        print(f"wrote {len(lines)} eigenvalues to {args.out}")
    else:
        for re, im in result["eigenvalues"]:
            print(f"{re!r},{im!r}")
    print(
        f"# ordering={result['ordering']} "
        f"reconstruction_residual={result['reconstruction_residual']:.3e}",
        file=sys.stderr,
    )
    return 0


def cmd_convolve(client: ServiceClient, args) -> int:
    payload = {
        "operation": args.operation,
        "a": {"law": args.a},
        "grid_size": args.grid_size,
    }
    if args.b:
        payload["b"] = {"law": args.b}
    if args.t is not None:
        payload["t"] = args.t
    result = client.convolve(**payload)
    support = " ".join(f"[{a:.4f},{b:.4f}]" for a, b in result["support"])
    print(
        f"{args.operation}: mean={result['mean']:.6f} variance={result['variance']:.6f} "
        f"support={support}"
    )
    if args.out:
        from .matio import measure_to_text
        from .service.models import MeasureModel

        measure = MeasureModel(**result["measure"]).to_measure()
        _write(args.out, measure_to_text(measure))
        print(f"wrote measure to {args.out}")
    return 0


def cmd_norm_oracle(client: ServiceClient, args) -> int:
    payload = {"oracle": args.oracle.replace("-", "_")}
    if args.a:
        payload["a"] = _float_pairs(args.a)
    if args.p is not None:
        payload["p"] = args.p
    if args.d is not None:
        payload["d"] = args.d
    if args.alpha:
        payload["alpha"] = _float_pairs(args.alpha)
    if args.l2 is not None:
        payload["l2"] = args.l2
    if args.coeffs:
        payload["coefficients"] = json.loads(Path(args.coeffs).read_text())
    if args.polynomial:
        result = client.polynomial_oracle(args.polynomial)
    else:
        result = client.norm_oracle(**payload)
    print(f"{result['oracle']}: {result['value']!r}")
    return 0


def cmd_experiment_run(client: ServiceClient, args) -> int:
    config_text = Path(args.config).read_text()
    result = client.run_experiment(config_text)
    output = args.output
    if output is None:
        from .harness.config import parse_config

        output = parse_config(config_text).output_path
    if output:
        _write(str(Path(output) / "records.csv"), result["records_csv"])
        _write(
            str(Path(output) / "manifest.json"),
            json.dumps(result["manifest"], indent=2, sort_keys=True) + "\n",
        )
    print(f"experiment: {result['kind']}")
    for n, agg in sorted(result["aggregates"].items(), key=lambda kv: int(kv[0])):
        print(
            f"  N={n}: median={agg['median']:.6g} iqr={agg['iqr']:.6g} "
            f"count={int(agg['count'])} pass_rate={agg['pass_rate']:.2f}"
        )
    if result.get("slope") is not None:
        print(f"  deviation-vs-N slope: {result['slope']:.3f}")
    for note in result["notes"]:
        print(f"  note: {note}")
    print(f"verdict: {'PASS' if result['verdict'] else 'FAIL'}")
    if output:
        print(f"wrote {output}/records.csv and {output}/manifest.json")
    return 0 if result["verdict"] else EXIT_FAIL_VERDICT


def cmd_verify(client: ServiceClient, args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    result = client.verify(manifest)
    print(
        f"reproduced={result['reproduced']} verdict_match={result['verdict_match']}\n"
        f"stored    {result['stored_digest']}\n"
        f"recomputed {result['recomputed_digest']}"
    )
    return 0 if result["reproduced"] and result["verdict_match"] else EXIT_FAIL_VERDICT


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haarlab",
        description="Random-matrix ensembles and free-probability numerics",
    )
    parser.add_argument("--url", default=None, help="remote service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw one ensemble sample")
    p.add_argument("--kind", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--master", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--diagonal", nargs="*", help="re,im cells for ConjugatedDiagonal")
    p.add_argument("--out", help="write the binary npz container here")
    p.add_argument("--csv", help="write row-major re,im CSV here")

    p = sub.add_parser("spectrum", help="eigenvalues of a stored or sampled matrix")
    p.add_argument("--matrix", help="npz container produced by `sample --out`")
    p.add_argument("--kind")
    p.add_argument("--dim", type=int)
    p.add_argument("--master", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--ordering", default="auto",
                   choices=["auto", "real_ascending", "argument_ascending"])
    p.add_argument("--out", help="write eigenvalues as re,im lines")

    p = sub.add_parser("convolve", help="free convolutions of measures")
    p.add_argument("operation", choices=["add", "mult", "compress"])
    p.add_argument("--a", required=True, help="law string, e.g. atoms:-1:0.5,1:0.5")
    p.add_argument("--b", help="law string for binary operations")
    p.add_argument("--t", type=float, help="compression parameter")
    p.add_argument("--grid-size", type=int, default=4096)
    p.add_argument("--out", help="write the measure file here")

    p = sub.add_parser("norm-oracle", help="closed-form norm values and bounds")
    p.add_argument("oracle", choices=[
        "akemann-ostrand", "kesten", "fell", "lehner", "haagerup", "kemp-speicher",
    ])
    p.add_argument("--a", nargs="*", help="re,im weights")
    p.add_argument("--p", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--alpha", nargs="*", help="re,im word coefficients")
    p.add_argument("--l2", type=float)
    p.add_argument("--coeffs", help="JSON file of k x k Hermitian matrices as re,im pairs")
    p.add_argument("--polynomial", help="classify a polynomial in text form instead")

    p = sub.add_parser("experiment", help="batch experiments")
    exp_sub = p.add_subparsers(dest="experiment_command", required=True)
    run_p = exp_sub.add_parser("run", help="run a config file")
    run_p.add_argument("config")
    run_p.add_argument("--output", help="override the config's output directory")

    p = sub.add_parser("verify", help="re-run a manifest and compare digests")
    p.add_argument("manifest")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    client = ServiceClient(args.url)
    try:
        if args.command == "sample":
            return cmd_sample(client, args)
        if args.command == "spectrum":
            return cmd_spectrum(client, args)
        if args.command == "convolve":
            return cmd_convolve(client, args)
        if args.command == "norm-oracle":
            return cmd_norm_oracle(client, args)
        if args.command == "experiment":
            return cmd_experiment_run(client, args)
        if args.command == "verify":
            return cmd_verify(client, args)
        raise SystemExit(f"unknown command {args.command!r}")
    finally:
        client.close()


if __name__ == "__main__":
    sys.exit(main())
