"""
Ring Lab - Artifacts
CSV, gnuplot-script and manifest emission. Everything is staged in a sibling temporary
directory that replaces the output directory only after every artifact has been written.
"""

import json
import logging
import os
import shutil
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from .errors import UsageError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


@dataclass
class EmittedFile:
    name: str
    rows: int


@dataclass
class RunManifest:
    scenario: str
    config_hash: str
    seed: int
    version: str
    subcommand: str = ""
    files: List[EmittedFile] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=str)


def gnuplot_script(csv_name: str, columns: Sequence[str], x: Optional[str] = None,
                   y: Optional[Sequence[str]] = None, logscale_x: bool = False) -> str:
    """Plot command file for one CSV: first column against the others unless given."""
    x = x or columns[0]
    y = list(y) if y is not None else [c for c in columns if c != x]
    index = {name: i + 1 for i, name in enumerate(columns)}
    stem = Path(csv_name).stem
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{x}'",
        "set grid",
        "set terminal pngcairo size 1000,700",
        f"set output '{stem}.png'",
    ]
    if logscale_x:
        lines.append("set logscale x")
    plots = [f"'{csv_name}' using {index[x]}:{index[c]} with linespoints title '{c}'" for c in y if c in index]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


class ArtifactWriter:
    """Collects artifacts in a staging directory next to `out` and commits them atomically.

    Use as a context manager: commit happens on a clean exit, the staging
    directory is discarded on an exception. A previous run's directory is
    replaced as a whole, so it never keeps files the new manifest does not list.
    A non-empty directory without a manifest is not ours and is refused.
    """

    def __init__(self, out_dir, manifest: RunManifest):
        self.out_dir = Path(out_dir)
        self.manifest = manifest
        self.staging: Optional[Path] = None

    def __enter__(self) -> "ArtifactWriter":
        if self.out_dir.exists():
            if not self.out_dir.is_dir():
                raise UsageError(f"output path {self.out_dir} is not a directory")
            if any(self.out_dir.iterdir()) and not (self.out_dir / "manifest.json").is_file():
                raise UsageError(f"output directory {self.out_dir} holds files from something other than a run")
        parent = self.out_dir.absolute().parent
        parent.mkdir(parents=True, exist_ok=True)
        self.staging = Path(tempfile.mkdtemp(prefix=f".{self.out_dir.name}-staging-", dir=parent))
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is None:
            self.commit()
        else:
            logger.error(f"Discarding staged artifacts after {exc_type.__name__}")
            shutil.rmtree(self.staging, ignore_errors=True)
        return False

    def write_csv(self, name: str, frame: pd.DataFrame, plot: bool = True, x: Optional[str] = None,
                  y: Optional[Sequence[str]] = None, logscale_x: bool = False) -> None:
        frame.to_csv(self.staging / name, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        self.manifest.files.append(EmittedFile(name, int(len(frame))))
        if plot:
            script = gnuplot_script(name, list(frame.columns), x, y, logscale_x)
            script_name = f"{Path(name).stem}.gp"
            (self.staging / script_name).write_text(script)
            self.manifest.files.append(EmittedFile(script_name, script.count("\n")))
        logger.info(f"Staged {name} ({len(frame)} rows)")

    def commit(self) -> None:
        (self.staging / "manifest.json").write_text(self.manifest.to_json() + "\n")
        retired = None
        if self.out_dir.exists():
            retired = Path(tempfile.mkdtemp(prefix=f".{self.out_dir.name}-retired-", dir=self.staging.parent))
            os.replace(self.out_dir, retired / "previous")
        try:
            os.replace(self.staging, self.out_dir)
        except OSError:
            if retired is not None:
                os.replace(retired / "previous", self.out_dir)
                retired.rmdir()
            raise
        if retired is not None:
            logger.info(f"Replacing the previous run in {self.out_dir}")
            shutil.rmtree(retired, ignore_errors=True)
        logger.info(f"Committed {len(self.manifest.files)} artifacts to {self.out_dir}")
