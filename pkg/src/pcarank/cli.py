"""Command-line client for the toolkit service.

Every subcommand issues one request against the HTTP API.  By default the
service runs in-process (no server needed); pass --server to target a
running instance instead.  Exit codes: 0 success, 1 usage error, 2 data or
validation error.
"""

from __future__ import annotations

import argparse
import asyncio
import sys

import httpx

from .experiments import DEFAULT_RATIO_GRID, VARIANTS
from .service import create_app


class UsageError(Exception):
    def __init__(self, message: str, usage: str):
        super().__init__(message)
        self.usage = usage


class ServiceError(Exception):
    """The service rejected the request (data or validation problem)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); we map usage to 1
        raise UsageError(message, self.format_usage())


def _post(server: str | None, path: str, payload: dict) -> dict:
    async def go() -> httpx.Response:
        if server is None:
            transport = httpx.ASGITransport(app=create_app())
            client = httpx.AsyncClient(transport=transport, base_url="http://pcarank")
        else:
            client = httpx.AsyncClient(base_url=server, timeout=600.0)
        async with client:
            return await client.post(path, json=payload)

    try:
        response = asyncio.run(go())
    except httpx.HTTPError as exc:
        raise ServiceError(f"cannot reach service: {exc}") from None
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise ServiceError(str(detail))
    return response.json()


def _pct(value: float | None) -> str:
    if value is None:
        return "undefined (baseline is 0)"
    return f"{value:+.1f}%"


def _csv_floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--server", default=None, help="remote service URL (default: in-process)")


def build_parser() -> _Parser:
    parser = _Parser(prog="pcarank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("fit", help="fit a projection model on a sample matrix", formatter_class=fmt)
    p.add_argument("--samples", required=True, help="EMB1 or TSV matrix to fit on")
    p.add_argument("--out", required=True, help="model output directory")
    p.add_argument("--ratio", type=float, default=0.9, help="retention ratio")
    p.add_argument(
        "--fitted-on",
        choices=("queries", "queries_and_documents", "custom"),
        default="custom",
        help="provenance tag stored with the model",
    )
    _add_common(p)

    p = sub.add_parser("project", help="project a matrix through a fitted model", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model directory from 'fit'")
    p.add_argument("--input", required=True, help="matrix to project")
    p.add_argument("--out", required=True, help="projected EMB1 output path")
    _add_common(p)

    p = sub.add_parser("retrieve", help="rank docs for each query by cosine", formatter_class=fmt)
    p.add_argument("--queries", required=True, help="query matrix (EMB1 or TSV)")
    p.add_argument("--docs", required=True, help="document matrix (EMB1 or TSV)")
    p.add_argument("--out", required=True, help="run file output path")
    p.add_argument("--model", default=None, help="optional model directory to project through")
    p.add_argument("--k", type=int, default=10, help="ranking depth")
    p.add_argument("--threads", type=int, default=1, help="worker thread bound")
    _add_common(p)

    p = sub.add_parser("eval", help="score a run file against qrels", formatter_class=fmt)
    p.add_argument("--run", required=True, help="run file from 'retrieve' or 'run'")
    p.add_argument("--qrels", required=True, help="relevance judgments TSV")
    p.add_argument("--k", type=int, default=10, help="ranking depth")
    p.add_argument("--out", default=None, help="optional per-query metrics TSV")
    _add_common(p)

    p = sub.add_parser("run", help="compare compression variants against the baseline", formatter_class=fmt)
    p.add_argument("--queries", default=None, help="query matrix (or set in --manifest)")
    p.add_argument("--docs", default=None, help="document matrix (or set in --manifest)")
    p.add_argument("--qrels", default=None, help="relevance judgments (or set in --manifest)")
    p.add_argument("--out-dir", default=None, help="directory for run files and tables")
    p.add_argument(
        "--variant",
        action="append",
        choices=VARIANTS,
        default=None,
        help="variant to run, repeatable (default: all four)",
    )
    p.add_argument("--ratio", type=float, default=None, help="retention ratio (default 0.9)")
    p.add_argument("--k", type=int, default=None, help="ranking depth (default 10)")
    p.add_argument("--seed", type=int, default=None, help="PRNG seed (default 42)")
    p.add_argument("--dataset", default=None, help="dataset label for tables")
    p.add_argument("--model-name", default=None, help="encoder label for tables")
    p.add_argument("--manifest", default=None, help="key = value file supplying defaults")
    p.add_argument("--threads", type=int, default=1, help="worker thread bound")
    _add_common(p)

    p = sub.add_parser("sweep", help="evaluate one variant across retention ratios", formatter_class=fmt)
    p.add_argument("--queries", default=None, help="query matrix (or set in --manifest)")
    p.add_argument("--docs", default=None, help="document matrix (or set in --manifest)")
    p.add_argument("--qrels", default=None, help="relevance judgments (or set in --manifest)")
    p.add_argument("--out", default=None, help="sweep curve TSV output path")
    p.add_argument("--variant", choices=VARIANTS, default=None, help="default query_compression")
    p.add_argument(
        "--ratios",
        default=None,
        help="comma-separated ratios (default 0.05 plus 0.1..1.0)",
    )
    p.add_argument("--k", type=int, default=None, help="ranking depth (default 10)")
    p.add_argument("--seed", type=int, default=None, help="PRNG seed (default 42)")
    p.add_argument("--manifest", default=None, help="key = value file supplying defaults")
    p.add_argument("--threads", type=int, default=1, help="worker thread bound")
    _add_common(p)

    p = sub.add_parser("cv", help="k-fold cross-validated evaluation", formatter_class=fmt)
    p.add_argument("--queries", default=None, help="query matrix (or set in --manifest)")
    p.add_argument("--docs", default=None, help="document matrix (or set in --manifest)")
    p.add_argument("--qrels", default=None, help="relevance judgments (or set in --manifest)")
    p.add_argument("--variant", choices=VARIANTS, default=None, help="default query_compression")
    p.add_argument("--folds", type=int, default=None, help="fold count (default 3)")
    p.add_argument("--ratio", type=float, default=None, help="retention ratio (default 0.9)")
    p.add_argument("--k", type=int, default=None, help="ranking depth (default 10)")
    p.add_argument("--seed", type=int, default=None, help="PRNG seed (default 42)")
    p.add_argument("--out", default=None, help="optional per-query metrics TSV")
    p.add_argument("--manifest", default=None, help="key = value file supplying defaults")
    p.add_argument("--threads", type=int, default=1, help="worker thread bound")
    _add_common(p)

    p = sub.add_parser("spectrum", help="power-law diagnostics of a PCA spectrum", formatter_class=fmt)
    p.add_argument("--samples", default=None, help="matrix to fit a full-rank PCA on")
    p.add_argument("--eigenvalues", default=None, help="TSV of eigenvalues, one per line")
    p.add_argument("--n-boot", type=int, default=1000, help="bootstrap replicates")
    p.add_argument("--seed", type=int, default=42, help="PRNG seed")
    p.add_argument("--out", default=None, help="optional spectrum report path")
    _add_common(p)

    p = sub.add_parser("familiarity", help="paraphrase-robustness familiarity scores", formatter_class=fmt)
    p.add_argument(
        "--embeddings",
        required=True,
        help="matrix whose ids follow the <id> / <id>#p<j> convention",
    )
    p.add_argument(
        "--gains",
        default=None,
        help="optional label<TAB>familiarity<TAB>gain TSV to correlate",
    )
    _add_common(p)

    p = sub.add_parser("simdist", help="relevant vs hard-negative similarity stats", formatter_class=fmt)
    p.add_argument("--queries", required=True, help="query matrix (EMB1 or TSV)")
    p.add_argument("--docs", required=True, help="document matrix (EMB1 or TSV)")
    p.add_argument("--qrels", required=True, help="relevance judgments TSV")
    p.add_argument("--variant", choices=VARIANTS, default="baseline", help="space to measure in")
    p.add_argument("--ratio", type=float, default=0.9, help="retention ratio")
    p.add_argument("--k", type=int, default=10, help="hard negatives come from the raw top-k")
    p.add_argument("--seed", type=int, default=42, help="PRNG seed")
    p.add_argument("--threads", type=int, default=1, help="worker thread bound")
    _add_common(p)

    p = sub.add_parser("convert", help="convert between EMB1 and TSV", formatter_class=fmt)
    p.add_argument("--input", required=True, help="matrix to convert (format auto-detected)")
    p.add_argument("--output", required=True, help="output path, written in the other format")
    _add_common(p)

    p = sub.add_parser("serve", help="run the HTTP service", formatter_class=fmt)
    p.add_argument("--host", default="127.0.0.1", help="bind address")
    p.add_argument("--port", type=int, default=8000, help="bind port")

    return parser


# manifest keys accepted in addition to the flag-named one
_MANIFEST_ALIASES = {"variant": "variants"}


def _merge_manifest(args: argparse.Namespace, keys: dict[str, type]) -> dict:
    """Fill unset flags from the manifest file, if one was given."""
    values: dict[str, object] = {}
    manifest: dict[str, str] = {}
    if getattr(args, "manifest", None):
        from .experiments import parse_manifest

        manifest = parse_manifest(args.manifest)
    for key, cast in keys.items():
        flag_value = getattr(args, key, None)
        manifest_key = key if key in manifest else _MANIFEST_ALIASES.get(key, key)
        if flag_value is not None:
            values[key] = flag_value
        elif manifest_key in manifest:
            raw = manifest[manifest_key]
            if cast is list:
                values[key] = [part.strip() for part in raw.split(",") if part.strip()]
            elif cast is bool:
                values[key] = raw.lower() in ("1", "true", "yes")
            else:
                values[key] = cast(raw)
    return values


def _require(values: dict, names: list[str], usage: str) -> None:
    missing = [f"--{name.replace('_', '-')}" for name in names if values.get(name) is None]
    if missing:
        raise UsageError(f"missing required arguments: {', '.join(missing)}", usage)


def _cmd_fit(args) -> int:
    data = _post(args.server, "/fit", {
        "samples": args.samples,
        "out_dir": args.out,
        "ratio": args.ratio,
        "fitted_on": args.fitted_on,
    })
    print(
        f"fitted {data['resolved_dim']} of {data['dim']} dims on "
        f"{data['n_fit_samples']} samples -> {data['out_dir']}"
    )
    print(f"total variance kept: {data['eigenvalue_sum']:.6g}")
    return 0


def _cmd_project(args) -> int:
    data = _post(args.server, "/project", {
        "model_dir": args.model, "input": args.input, "out": args.out,
    })
    print(f"projected {data['n_items']} rows to dim {data['dim']} -> {data['out']}")
    return 0


def _cmd_retrieve(args) -> int:
    data = _post(args.server, "/retrieve", {
        "queries": args.queries,
        "docs": args.docs,
        "out": args.out,
        "k": args.k,
        "model_dir": args.model,
        "threads": args.threads,
    })
    print(
        f"ranked top-{data['k']} of {data['n_docs']} docs for "
        f"{data['n_queries']} queries -> {data['out']}"
    )
    if data["zero_norm_queries"] or data["zero_norm_docs"]:
        print(
            f"warning: {data['zero_norm_queries']} zero-norm queries, "
            f"{data['zero_norm_docs']} zero-norm docs scored as 0"
        )
    return 0


def _print_eval(data: dict) -> None:
    macro = data["macro"]
    print(f"queries evaluated: {data['n_evaluated']} (skipped: {data['n_skipped']})")
    print(f"macro ndcg@{data['k']}:      {macro['ndcg']:.4f}")
    print(f"macro recall@{data['k']}:    {macro['recall']:.4f}")
    print(f"macro precision@{data['k']}: {macro['precision']:.4f}")
    if data.get("out"):
        print(f"per-query metrics -> {data['out']}")


def _cmd_eval(args) -> int:
    data = _post(args.server, "/eval", {
        "run": args.run, "qrels": args.qrels, "k": args.k, "out": args.out,
    })
    _print_eval(data)
    return 0


def _cmd_run(args) -> int:
    values = _merge_manifest(args, {
        "queries": str, "docs": str, "qrels": str, "out_dir": str,
        "ratio": float, "k": int, "seed": int, "dataset": str,
        "model_name": str, "variant": list,
    })
    usage = "usage: pcarank run --queries Q --docs D --qrels R --out-dir DIR\n"
    _require(values, ["queries", "docs", "qrels", "out_dir"], usage)
    payload = {
        "queries": values["queries"],
        "docs": values["docs"],
        "qrels": values["qrels"],
        "out_dir": values["out_dir"],
        "ratio": values.get("ratio", 0.9),
        "k": values.get("k", 10),
        "seed": values.get("seed", 42),
        "dataset": values.get("dataset", ""),
        "model_name": values.get("model_name", ""),
        "threads": args.threads,
    }
    if values.get("variant"):
        payload["variants"] = values["variant"]
    data = _post(args.server, "/run", payload)
    print(f"{'variant':<24} {'ndcg@' + str(payload['k']):>10} {'improvement':>14}")
    for result in data["results"]:
        pct = "-" if result["variant"] == "baseline" else _pct(result["improvement_pct"])
        print(f"{result['variant']:<24} {result['macro']['ndcg']:>10.4f} {pct:>14}")
        if result["zero_norm_queries"] or result["zero_norm_docs"]:
            print(
                f"  warning: {result['zero_norm_queries']} zero-norm queries, "
                f"{result['zero_norm_docs']} zero-norm docs scored as 0"
            )
    print(f"comparison table -> {data['comparison_file']}")
    return 0


def _cmd_sweep(args) -> int:
    values = _merge_manifest(args, {
        "queries": str, "docs": str, "qrels": str, "out": str,
        "variant": str, "ratios": str, "k": int, "seed": int,
    })
    usage = "usage: pcarank sweep --queries Q --docs D --qrels R --out FILE\n"
    _require(values, ["queries", "docs", "qrels", "out"], usage)
    ratios = values.get("ratios")
    payload = {
        "queries": values["queries"],
        "docs": values["docs"],
        "qrels": values["qrels"],
        "out": values["out"],
        "variant": values.get("variant", "query_compression"),
        "ratios": _csv_floats(ratios) if ratios else list(DEFAULT_RATIO_GRID),
        "k": values.get("k", 10),
        "seed": values.get("seed", 42),
        "threads": args.threads,
    }
    data = _post(args.server, "/sweep", payload)
    print(f"{'ratio':>6} {'ndcg@' + str(payload['k']):>10}")
    for point in data["points"]:
        print(f"{point['ratio']:>6.2f} {point['macro']['ndcg']:>10.4f}")
    print(f"sweep curve -> {data['out']}")
    return 0


def _cmd_cv(args) -> int:
    values = _merge_manifest(args, {
        "queries": str, "docs": str, "qrels": str, "variant": str,
        "folds": int, "ratio": float, "k": int, "seed": int, "out": str,
    })
    usage = "usage: pcarank cv --queries Q --docs D --qrels R\n"
    _require(values, ["queries", "docs", "qrels"], usage)
    data = _post(args.server, "/cv", {
        "queries": values["queries"],
        "docs": values["docs"],
        "qrels": values["qrels"],
        "variant": values.get("variant", "query_compression"),
        "folds": values.get("folds", 3),
        "ratio": values.get("ratio", 0.9),
        "k": values.get("k", 10),
        "seed": values.get("seed", 42),
        "out": values.get("out"),
        "threads": args.threads,
    })
    print(f"{values.get('folds', 3)}-fold cross-validation, "
          f"variant {values.get('variant', 'query_compression')}")
    _print_eval(data)
    return 0


def _cmd_spectrum(args) -> int:
    data = _post(args.server, "/spectrum", {
        "samples": args.samples,
        "eigenvalues": args.eigenvalues,
        "n_boot": args.n_boot,
        "seed": args.seed,
        "out": args.out,
    })
    print(f"eigenvalues analyzed: {data['n_eigenvalues']}")
    print(f"beta:      {data['beta']:.6g}  (95% CI {data['ci_low']:.6g} .. {data['ci_high']:.6g})")
    print(f"r_squared: {data['r_squared']:.6g}")
    print(f"k_min:     {data['k_min']}")
    print(f"ks_stat:   {data['ks_stat']:.6g}")
    print(f"p_value:   {data['p_value']:.4g}  ({args.n_boot} bootstrap replicates)")
    if data.get("out"):
        print(f"spectrum report -> {data['out']}")
    return 0


def _cmd_familiarity(args) -> int:
    data = _post(args.server, "/familiarity", {
        "embeddings": args.embeddings, "gains": args.gains,
    })
    for text in data["per_text"]:
        print(
            f"{text['original_id']}\t{text['familiarity']:.4f}"
            f"\t({text['n_paraphrases']} paraphrases)"
        )
    print(f"domain familiarity: {data['domain_familiarity']:.4f}")
    if data.get("pearson_r") is not None:
        print(f"pearson r vs gain: {data['pearson_r']:.4f} (p = {data['pearson_p']:.4g})")
    return 0


def _cmd_simdist(args) -> int:
    data = _post(args.server, "/simdist", {
        "queries": args.queries,
        "docs": args.docs,
        "qrels": args.qrels,
        "variant": args.variant,
        "ratio": args.ratio,
        "k": args.k,
        "seed": args.seed,
        "threads": args.threads,
    })
    rel, non = data["relevant"], data["nonrelevant"]
    print(f"space: {args.variant}")
    print(f"relevant:     mean {rel['mean']:.4f}  std {rel['std']:.4f}  n {rel['count']}")
    print(f"non-relevant: mean {non['mean']:.4f}  std {non['std']:.4f}  n {non['count']}")
    print(f"mean gap:     {data['mean_gap']:.4f}")
    return 0


def _cmd_convert(args) -> int:
    data = _post(args.server, "/convert", {"input": args.input, "output": args.output})
    print(f"wrote {data['n_items']}x{data['dim']} {data['format']} matrix -> {data['output']}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


_HANDLERS = {
    "fit": _cmd_fit,
    "project": _cmd_project,
    "retrieve": _cmd_retrieve,
    "eval": _cmd_eval,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "cv": _cmd_cv,
    "spectrum": _cmd_spectrum,
    "familiarity": _cmd_familiarity,
    "simdist": _cmd_simdist,
    "convert": _cmd_convert,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc.usage, file=sys.stderr, end="")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _HANDLERS[args.subcommand](args)
    except UsageError as exc:
        print(exc.usage, file=sys.stderr, end="")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
