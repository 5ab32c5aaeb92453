"""Artifact writer for CLI runs.

Every file of a run is written through one ArtifactWriter, which records its
checksum so the manifest can be emitted last. Contents carry no timestamps;
the same inputs give byte-identical directories.
"""

import csv
import io
import threading
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence, Union

from app.core.logging import get_logger
from app.models.readout import FidTrace, Spectrum
from app.utils.common import canonical_json, sha256_hex, sig

logger = get_logger("floquetsim.artifacts")

SCHEMA_VERSION = 1
FID_HEADER = ("time_s", "re", "im")
SPECTRUM_HEADER = ("frequency_hz", "re", "im")


class ArtifactWriter:
    """Serialized writer for one output directory.

    Attributes:
        root: Output directory, created on first use.
    """

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self._checksums: Dict[str, Dict[str, Any]] = {}
        self._lock = threading.Lock()

    def _write(self, name: str, data: bytes) -> Path:
        with self._lock:
            self.root.mkdir(parents=True, exist_ok=True)
            path = self.root / name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
            self._checksums[name] = {"name": name, "sha256": sha256_hex(data), "bytes": len(data)}
        return path

    def write_text(self, name: str, text: str) -> Path:
        return self._write(name, text.encode("utf-8"))

    def write_json(self, name: str, payload: Any) -> Path:
        return self.write_text(name, canonical_json(payload))

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([sig(v) for v in row])
        return self.write_text(name, buf.getvalue())

    def write_fid(self, name: str, fid: FidTrace) -> Path:
        return self.write_csv(
            name, FID_HEADER, zip(fid.times, fid.samples.real, fid.samples.imag)
        )

    def write_spectrum(self, name: str, spectrum: Spectrum) -> Path:
        return self.write_csv(
            name,
            SPECTRUM_HEADER,
            zip(spectrum.frequencies, spectrum.amplitudes.real, spectrum.amplitudes.imag),
        )

    def write_summary(self, command: str, payload: Dict[str, Any]) -> Path:
        body = {"schema_version": SCHEMA_VERSION, "command": command}
        body.update(payload)
        return self.write_json("summary.json", body)

    def write_manifest(self, command: str) -> Path:
        """manifest.json listing every artifact written so far, sorted by name."""
        with self._lock:
            artifacts = [self._checksums[k] for k in sorted(self._checksums)]
        path = self.write_json(
            "manifest.json",
            {"schema_version": SCHEMA_VERSION, "command": command, "artifacts": artifacts},
        )
        logger.info(
            "Artifacts written",
            extra={"event": "artifacts", "command": command, "path": str(self.root)},
        )
        return path

    @property
    def artifacts(self) -> Dict[str, Dict[str, Any]]:
        with self._lock:
            return dict(self._checksums)
