"""Command-line interface.

Intermediate binary matrices travel as ``.npz`` files (packed words plus
column map and sample ids); reports print as JSON on stdout.  The default
workspace comes from ``GENOSHARE_WORKSPACE`` (falling back to ``./workspace``).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .bits import BinaryMatrix
from .errors import ToolkitError
from .ingest import (
    align_to_reference,
    decode_binary,
    encode_binary,
    impute_missing,
    parse_genotype_matrix,
    parse_reference_panel,
    serialize_genotype_matrix,
)
from .mechanism import (
    BudgetSemantics,
    NoiseMode,
    NoiseModel,
    PrivacyBudget,
    build_correlation_blocks,
    build_independent_model,
    calibrate_markov,
    noise_model_from_dict,
    noise_model_to_dict,
    sample_noise,
    verify_dp_bruteforce,
    xor_apply,
)
from .metrics import build_utility_report
from .pipeline import RunConfig, run_pipeline, tradeoff_curve
from .postprocess import restore
from .synth import simulate_population
from .workspace import Workspace


def _default_workspace() -> str:
    return os.environ.get("GENOSHARE_WORKSPACE", "workspace")


def _echo_json(payload) -> None:
    click.echo(json.dumps(payload, indent=2))


def _save_matrix(path: str, bm: BinaryMatrix) -> None:
    np.savez_compressed(
        path,
        words=bm.words,
        bit_columns=np.int64(bm.bit_columns),
        column_map=np.array(bm.column_map),
        sample_ids=np.array(bm.sample_ids),
    )


def _load_matrix(path: str) -> BinaryMatrix:
    with np.load(path, allow_pickle=False) as data:
        return BinaryMatrix(
            words=data["words"].copy(),
            bit_columns=int(data["bit_columns"]),
            column_map=tuple(str(v) for v in data["column_map"]),
            sample_ids=tuple(str(v) for v in data["sample_ids"]),
        )


def _load_aligned(dataset: str, panel_path: str):
    ds = parse_genotype_matrix(Path(dataset).read_text())
    panel = parse_reference_panel(Path(panel_path).read_text())
    aligned, dropped = align_to_reference(ds, panel)
    return impute_missing(aligned, panel), panel, dropped


workspace_option = click.option(
    "--workspace", default=_default_workspace, show_default="$GENOSHARE_WORKSPACE",
    help="Workspace directory for runs and datasets.")
semantics_option = click.option(
    "--semantics", type=click.Choice(["per-record", "per-bit"]), default="per-record",
    show_default=True, help="Whether epsilon covers a whole record or a single bit.")
mode_option = click.option(
    "--mode", type=click.Choice(["independent", "markov"]), default="independent",
    show_default=True, help="Noise coupling across adjacent bit columns.")


@click.group()
@click.version_option(version=__version__)
def main():
    """Share SNP genotype datasets under differential privacy."""


@main.command()
@click.option("--dataset", required=True, help="Genotype matrix TSV.")
@click.option("--panel", required=True, help="Reference panel TSV.")
@click.option("--out", required=True, help="Output .npz binary matrix.")
def encode(dataset, panel, out):
    """Align, impute, and encode a genotype dataset to a binary matrix."""
    complete, _panel, dropped = _load_aligned(dataset, panel)
    bm = encode_binary(complete)
    _save_matrix(out, bm)
    _echo_json({"rows": bm.rows, "bit_columns": bm.bit_columns,
                "snps": len(bm.column_map), "dropped_rsids": len(dropped)})


@main.command()
@click.option("--matrix", "matrix_path", required=True, help="Input .npz binary matrix.")
@click.option("--panel", required=True, help="Reference panel TSV (markov calibration).")
@click.option("--epsilon", type=float, required=True)
@semantics_option
@mode_option
@click.option("--alpha", type=float, default=0.5, show_default=True,
              help="Budget share for column coupling (markov only).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, help="Output .npz perturbed matrix.")
@click.option("--noise-model", "model_out", required=True, help="Output noise-model JSON.")
def perturb(matrix_path, panel, epsilon, semantics, mode, alpha, seed, out, model_out):
    """Stage 1: apply calibrated XOR noise to an encoded matrix."""
    bm = _load_matrix(matrix_path)
    budget = PrivacyBudget(epsilon, BudgetSemantics(semantics))
    if NoiseMode(mode) is NoiseMode.INDEPENDENT:
        model = build_independent_model(budget, bm.bit_columns)
    else:
        full = parse_reference_panel(Path(panel).read_text())
        subset = [s for s in full.snps if s.rsid in set(bm.column_map)]
        public = simulate_population(type(full)(tuple(subset)), 256, 0x517A7E)
        plan = build_correlation_blocks(encode_binary(public))
        model = calibrate_markov(budget, plan, bm.bit_columns, alpha)
    noise = sample_noise(model, bm.rows, bm.bit_columns, seed)
    _save_matrix(out, xor_apply(bm, noise))
    Path(model_out).write_text(json.dumps(noise_model_to_dict(model, seed)) + "\n")
    _echo_json({"epsilon_upper": model.epsilon_upper, "p": model.p, "mode": mode})


@main.command("restore")
@click.option("--matrix", "matrix_path", required=True, help="Perturbed .npz matrix.")
@click.option("--panel", required=True, help="Reference panel TSV.")
@click.option("--noise-model", "model_path", required=True, help="Noise-model JSON from perturb.")
@click.option("--lambda", "lam", type=float, default=0.5, show_default=True,
              help="Blend between debiased observation and public prior.")
@click.option("--out", help="Output .npz restored matrix.")
@click.option("--out-tsv", help="Also decode and write the shared genotype TSV.")
def restore_cmd(matrix_path, panel, model_path, lam, out, out_tsv):
    """Stage 2: repair a perturbed matrix from public statistics."""
    if not out and not out_tsv:
        raise click.UsageError("provide --out and/or --out-tsv")
    bm = _load_matrix(matrix_path)
    panel = parse_reference_panel(Path(panel).read_text())
    model, _seed = noise_model_from_dict(json.loads(Path(model_path).read_text()))
    repaired = restore(bm, model, panel, lam)
    if out:
        _save_matrix(out, repaired)
    if out_tsv:
        Path(out_tsv).write_text(serialize_genotype_matrix(decode_binary(repaired)))
    _echo_json({"rows": repaired.rows, "bit_columns": repaired.bit_columns})


@main.command()
@click.option("--original", required=True, help="Original genotype TSV.")
@click.option("--shared", required=True, help="Shared genotype TSV.")
@click.option("--epsilon", type=float, default=float("nan"), help="Budget to echo in the report.")
@semantics_option
def evaluate(original, shared, epsilon, semantics):
    """Utility metrics between an original and a shared matrix."""
    a = parse_genotype_matrix(Path(original).read_text())
    b = parse_genotype_matrix(Path(shared).read_text())
    report = build_utility_report(a, b, epsilon, BudgetSemantics(semantics))
    _echo_json(report.to_dict())


@main.command()
@click.option("--shared", required=True, help="Shared genotype TSV (the release).")
@click.option("--panel", required=True, help="Reference panel TSV.")
@click.option("--members", required=True,
              help="Genotype TSV whose rows are the true members.")
@click.option("--trials", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epsilon", type=float, default=float("nan"), help="Budget to echo in the report.")
def attack(shared, panel, members, trials, seed, epsilon):
    """Membership-inference evaluation against a shared release."""
    from .attack import evaluate_attack

    release = parse_genotype_matrix(Path(shared).read_text())
    full = parse_reference_panel(Path(panel).read_text())
    member_ds = parse_genotype_matrix(Path(members).read_text())
    aligned, _ = align_to_reference(member_ds, full)
    aligned = impute_missing(aligned, full)
    if aligned.rsids != release.rsids:
        release, _ = align_to_reference(release, full)
    subset = type(full)(tuple(s for s in full.snps if s.rsid in set(release.rsids)))
    k = min(aligned.n, trials // 2)
    synthetic = simulate_population(subset, max(trials - k, 2), seed, id_prefix="non")
    report = evaluate_attack(release, subset, aligned.genotypes[:k],
                             synthetic.genotypes, epsilon=epsilon)
    _echo_json(report.to_dict())


@main.command()
@click.option("--dataset", required=True, help="Genotype matrix TSV.")
@click.option("--panel", required=True, help="Reference panel TSV.")
@click.option("--epsilon", type=float, required=True)
@semantics_option
@mode_option
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--lambda", "lam", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--attack-trials", type=int, default=200, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@workspace_option
def run(dataset, panel, epsilon, semantics, mode, alpha, lam, seed,
        attack_trials, threads, workspace):
    """Full pipeline run; artifacts land in the workspace."""
    cfg = RunConfig(
        dataset=str(Path(dataset).resolve()),
        panel=str(Path(panel).resolve()),
        epsilon=epsilon,
        semantics=BudgetSemantics(semantics),
        mode=NoiseMode(mode),
        alpha=alpha,
        lam=lam,
        seed=seed,
        attack_trials=attack_trials,
        workspace=workspace,
    )
    report = run_pipeline(cfg, threads=threads)
    _echo_json(report.to_dict())


@main.command()
@click.option("--dataset", required=True, help="Genotype matrix TSV.")
@click.option("--panel", required=True, help="Reference panel TSV.")
@click.option("--epsilons", required=True, help="Comma-separated increasing grid, e.g. 0.5,1,2.")
@semantics_option
@mode_option
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--lambda", "lam", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--attack-trials", type=int, default=200, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@workspace_option
def tradeoff(dataset, panel, epsilons, semantics, mode, alpha, lam, seed,
             attack_trials, threads, workspace):
    """Sweep an epsilon grid and print the privacy-utility curve."""
    cfg = RunConfig(
        dataset=str(Path(dataset).resolve()),
        panel=str(Path(panel).resolve()),
        epsilon=1.0,
        semantics=BudgetSemantics(semantics),
        mode=NoiseMode(mode),
        alpha=alpha,
        lam=lam,
        seed=seed,
        attack_trials=attack_trials,
        workspace=workspace,
    )
    grid = [float(v) for v in epsilons.split(",") if v.strip()]
    curve = tradeoff_curve(cfg, grid, threads=threads)
    _echo_json(curve.to_dict())


@main.command("verify-dp")
@click.option("--p", type=float, required=True, help="Flip probability in (0, 0.5].")
@mode_option
@click.option("--q", type=float, default=0.75, show_default=True,
              help="Uniform stay probability (markov only).")
@click.option("--bits", type=int, default=8, show_default=True, help="Record width, <= 12.")
def verify_dp(p, mode, q, bits):
    """Brute-force check that the claimed epsilon bound holds."""
    if NoiseMode(mode) is NoiseMode.INDEPENDENT:
        stay = None
    else:
        stay = np.full(max(bits - 1, 0), q)
    from .mechanism import epsilon_upper_bound_for

    model = NoiseModel(p, NoiseMode(mode), stay,
                       epsilon_upper_bound_for(p, stay, bits))
    _echo_json(verify_dp_bruteforce(model, bits).to_dict())


@main.command()
@click.option("--port", type=int, default=8712, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--frontend", default=None, help="Directory of built dashboard assets.")
@workspace_option
def serve(port, host, frontend, workspace):
    """Serve the HTTP API (and dashboard, if built) over a workspace."""
    from .service import serve as serve_app

    if frontend is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        frontend = candidate if candidate.is_dir() else None
    Workspace(workspace)  # create/sweep eagerly so startup errors are early
    click.echo(f"serving workspace {workspace!r} on http://{host}:{port}", err=True)
    serve_app(workspace, port=port, host=host, frontend_dir=frontend)


def entrypoint(argv=None):
    try:
        main(args=argv, standalone_mode=True)
    except ToolkitError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    entrypoint()
