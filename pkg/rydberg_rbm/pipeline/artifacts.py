"""
On-disk artifacts

Dataset files are plain text (one '0'/'1' string per line, site 0 leftmost,
newline-terminated; optionally gzip) with a JSON sidecar holding the header.
States, models and reports are JSON; tables are CSV with a leading
`# schema=<name>/<version> config_hash=<h> seed=<s>` line. Every artifact
carries the config hash and master seed so mixed provenance can be refused.
"""

import gzip
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import numpy as np
import pandas as pd

from rydberg_rbm.bits import strings_to_bits
from rydberg_rbm.dataset import Dataset
from rydberg_rbm.exceptions import ProvenanceError
from rydberg_rbm.quantum.states import QuantumState
from rydberg_rbm.rbm.machine import RBM

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DATASET_SCHEMA = "dataset/1"
STATE_SCHEMA = "state/1"
CSV_VERSION = 1


def write_json(path: PathLike, payload: Dict[str, Any]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Artifact not found: {path}")
    return json.loads(path.read_text())


class DatasetFile:
    """
    A dataset body plus its JSON header

    Args:
        base: Path without extension, e.g. out/t01/dataset
        compress: Write the body gzip-compressed
    """

    def __init__(self, base: PathLike, compress: bool = False):
        self.base = Path(base)
        self.compress = compress

    @classmethod
    def locate(cls, path: PathLike) -> "DatasetFile":
        """Resolve any of base, base.txt, base.txt.gz or base.json"""
        path = Path(path)
        name = path.name
        for suffix in (".txt.gz", ".txt", ".json"):
            if name.endswith(suffix):
                base = path.with_name(name[: -len(suffix)])
                break
        else:
            base = path
        compressed = Path(f"{base}.txt.gz").exists()
        found = cls(base, compressed)
        if not found.header_path.exists():
            raise FileNotFoundError(f"Dataset header not found: {found.header_path}")
        return found

    @property
    def body_path(self) -> Path:
        return Path(f"{self.base}.txt.gz" if self.compress else f"{self.base}.txt")

    @property
    def header_path(self) -> Path:
        return Path(f"{self.base}.json")

    def write(self, d: Dataset) -> None:
        self.base.parent.mkdir(parents=True, exist_ok=True)
        body = "".join(line + "\n" for line in d.strings()).encode("ascii")
        if self.compress:
            with open(self.body_path, "wb") as raw:
                # mtime=0 keeps the compressed bytes reproducible
                with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as gz:
                    gz.write(body)
        else:
            self.body_path.write_bytes(body)
        header = {"schema": DATASET_SCHEMA, **d.metadata()}
        write_json(self.header_path, header)
        logger.debug(f"Wrote {d.n_samples} records to {self.body_path}")

    def read_header(self) -> Dict[str, Any]:
        return read_json(self.header_path)

    def read(self) -> Dataset:
        """
        Load and validate the dataset

        Raises:
            ValueError: if line lengths or the line count disagree with the header
        """
        header = self.read_header()
        if not self.body_path.exists():
            raise FileNotFoundError(f"Dataset body not found: {self.body_path}")
        raw = self.body_path.read_bytes()
        if self.compress:
            raw = gzip.decompress(raw)
        lines = raw.decode("ascii").splitlines()
        n_sites, n_samples = int(header["n_sites"]), int(header["n_samples"])
        if len(lines) != n_samples:
            raise ValueError(f"{self.body_path}: {len(lines)} lines, header says {n_samples}")
        bits = strings_to_bits(lines) if lines else np.zeros((0, n_sites), dtype=np.uint8)
        if bits.shape[1] != n_sites:
            raise ValueError(f"{self.body_path}: strings have length {bits.shape[1]}, header says N={n_sites}")
        return Dataset(
            bits,
            seed=header.get("seed"),
            source=header.get("source", ""),
            sweep_time=header.get("sweep_time"),
            noise=header.get("noise"),
            noise_seed=header.get("noise_seed"),
            config_hash=header.get("config_hash"),
            extra=header.get("extra") or {},
        )


def write_state(path: PathLike, state: QuantumState, config_hash: Optional[str], seed: Optional[int],
                **extra) -> None:
    write_json(path, {"schema": STATE_SCHEMA, "config_hash": config_hash, "seed": seed,
                      "state": state.to_json(), **extra})


def read_state(path: PathLike) -> Tuple[QuantumState, Dict[str, Any]]:
    payload = read_json(path)
    if payload.get("schema") != STATE_SCHEMA:
        raise ValueError(f"{path} is not a state file (schema={payload.get('schema')!r})")
    return QuantumState.from_json(payload.pop("state")), payload


def read_model(path: PathLike) -> Tuple[RBM, Dict[str, Any]]:
    """Checkpoint plus its provenance fields"""
    payload = read_json(path)
    machine = RBM.load(path)
    return machine, {"config_hash": payload.get("config_hash"), "seed": payload.get("seed")}


def csv_header(schema: str, config_hash: Optional[str], seed: Optional[int]) -> str:
    return f"# schema={schema}/{CSV_VERSION} config_hash={config_hash} seed={seed}\n"


def write_csv(path: PathLike, frame: pd.DataFrame, schema: str, config_hash: Optional[str],
              seed: Optional[int]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(csv_header(schema, config_hash, seed))
        frame.to_csv(f, index=False, float_format="%.17g")


def read_csv(path: PathLike) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """Table plus the fields of its schema line"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Table not found: {path}")
    with open(path) as f:
        first = f.readline()
    if not first.startswith("# "):
        raise ValueError(f"{path} lacks a schema header line")
    meta = dict(item.split("=", 1) for item in first[2:].split())
    return pd.read_csv(path, skiprows=1), meta


def check_provenance(hashes: Iterable[Optional[str]], what: str) -> Optional[str]:
    """
    The one config hash shared by all artifacts (None entries are ignored)

    Raises:
        ProvenanceError: if two artifacts carry different hashes
    """
    distinct = sorted({h for h in hashes if h not in (None, "None")})
    if len(distinct) > 1:
        raise ProvenanceError(f"{what}: artifacts come from different configs ({', '.join(distinct)}); "
                              f"regenerate them from one config")
    return distinct[0] if distinct else None
