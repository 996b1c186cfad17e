"""On-disk workspace for datasets, run artifacts, and steward decisions.

Layout::

    <root>/datasets/<name>/{genotypes.tsv,panel.tsv,meta.json}
    <root>/runs/<run-id>/{report.json,shared.tsv,noise-model.json}
    <root>/decisions.jsonl

Run directories are written to a temporary sibling and renamed into place,
so a run directory is either absent or complete.  Decisions are an
append-only log; nothing here ever deletes a source dataset.
"""

from __future__ import annotations

import json
import os
import shutil
import time
import uuid
from pathlib import Path

from .errors import ConfigError, ParseError
from .ingest import parse_genotype_matrix, parse_reference_panel

DECISIONS = ("share", "hold")
_TMP_PREFIX = ".tmp-"


class Workspace:
    def __init__(self, root):
        self.root = Path(root)
        self.datasets_dir = self.root / "datasets"
        self.runs_dir = self.root / "runs"
        self.decisions_path = self.root / "decisions.jsonl"
        self.datasets_dir.mkdir(parents=True, exist_ok=True)
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self._sweep_stale_temp()

    def _sweep_stale_temp(self):
        for entry in self.runs_dir.glob(_TMP_PREFIX + "*"):
            shutil.rmtree(entry, ignore_errors=True)

    # -- datasets ---------------------------------------------------------

    def import_dataset(self, name: str, genotypes_text: str, panel_text: str) -> dict:
        """Validate and store a dataset; returns its summary."""
        if not name or "/" in name or name.startswith("."):
            raise ConfigError(f"invalid dataset name {name!r}")
        ds = parse_genotype_matrix(genotypes_text)
        parse_reference_panel(panel_text)
        target = self.datasets_dir / name
        target.mkdir(parents=True, exist_ok=True)
        (target / "genotypes.tsv").write_text(genotypes_text)
        (target / "panel.tsv").write_text(panel_text)
        meta = {"name": name, "samples": ds.n, "snps": ds.m}
        (target / "meta.json").write_text(json.dumps(meta))
        return meta

    def dataset_paths(self, name: str) -> tuple[Path, Path]:
        base = self.datasets_dir / name
        g, p = base / "genotypes.tsv", base / "panel.tsv"
        if not g.is_file() or not p.is_file():
            raise ParseError(f"dataset {name!r} not found in workspace")
        return g, p

    def list_datasets(self) -> list[dict]:
        out = []
        for entry in sorted(self.datasets_dir.iterdir()) if self.datasets_dir.is_dir() else []:
            meta_path = entry / "meta.json"
            if meta_path.is_file():
                out.append(json.loads(meta_path.read_text()))
            elif (entry / "genotypes.tsv").is_file():
                ds = parse_genotype_matrix((entry / "genotypes.tsv").read_text())
                out.append({"name": entry.name, "samples": ds.n, "snps": ds.m})
        return out

    # -- runs -------------------------------------------------------------

    def run_dir(self, run_id: str) -> Path:
        return self.runs_dir / run_id

    def has_run(self, run_id: str) -> bool:
        return (self.run_dir(run_id) / "report.json").is_file()

    def load_report_dict(self, run_id: str) -> dict:
        return json.loads((self.run_dir(run_id) / "report.json").read_text())

    def list_run_ids(self) -> list[str]:
        if not self.runs_dir.is_dir():
            return []
        return sorted(
            p.name for p in self.runs_dir.iterdir()
            if p.is_dir() and not p.name.startswith(_TMP_PREFIX)
        )

    def publish_run(self, run_id: str, files: dict) -> Path:
        """Atomically materialize a run directory from {filename: text}."""
        final = self.run_dir(run_id)
        if final.exists():
            return final
        tmp = self.runs_dir / f"{_TMP_PREFIX}{run_id}-{uuid.uuid4().hex}"
        tmp.mkdir()
        try:
            for filename, text in files.items():
                (tmp / filename).write_text(text)
            try:
                os.replace(tmp, final)
            except OSError:
                if not final.exists():
                    raise
                shutil.rmtree(tmp, ignore_errors=True)  # lost a publish race
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
        return final

    # -- decisions --------------------------------------------------------

    def append_decision(self, run_id: str, decision: str, rationale: str) -> dict:
        if decision not in DECISIONS:
            raise ConfigError(f"decision must be one of {DECISIONS}, got {decision!r}")
        if not rationale or not rationale.strip():
            raise ConfigError("a rationale is required")
        if not self.has_run(run_id):
            raise ConfigError(f"run {run_id!r} does not exist or is incomplete")
        entry = {
            "run_id": run_id,
            "decision": decision,
            "rationale": rationale,
            "recorded_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        }
        with open(self.decisions_path, "a") as fh:
            fh.write(json.dumps(entry) + "\n")
        return entry

    def list_decisions(self) -> list[dict]:
        """All recorded decisions, newest first."""
        if not self.decisions_path.is_file():
            return []
        lines = self.decisions_path.read_text().splitlines()
        return [json.loads(line) for line in reversed(lines) if line.strip()]
