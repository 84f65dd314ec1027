"""
Certificate store
Persists JSON certificates and keeps a ledger of every recorded run
"""

import json
import logging
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import config

logger = logging.getLogger(__name__)


class CertificateStore:
    """Writes one JSON file per certificate and indexes them in ledger.json"""

    def __init__(self, storage_dir: Optional[str] = None):
        if storage_dir is None:
            storage_dir = config.CERT_DIR

        self.storage_dir = Path(storage_dir)
        self.storage_dir.mkdir(parents=True, exist_ok=True)

        self.ledger_file = self.storage_dir / "ledger.json"
        self.ledger = self._load_ledger()

    def _load_ledger(self) -> Dict[str, Any]:
        """Load the ledger from storage"""
        if self.ledger_file.exists():
            try:
                with open(self.ledger_file, "r") as f:
                    return json.load(f)
            except (OSError, ValueError) as e:
                logger.warning("Unreadable ledger %s, starting a new one: %s", self.ledger_file, e)
        return self._initialize_ledger()

    def _initialize_ledger(self) -> Dict[str, Any]:
        return {
            "certificates": [],
            "summary": {
                "total": 0,
                "by_kind": {},
                "by_verdict": {},
            },
        }

    def _save_ledger(self) -> None:
        try:
            with open(self.ledger_file, "w") as f:
                json.dump(self.ledger, f, indent=2, sort_keys=True)
        except OSError as e:
            logger.error("Error saving ledger %s: %s", self.ledger_file, e)

    @staticmethod
    def _verdict_of(payload: Dict[str, Any]) -> str:
        for key in ("verdict", "goe", "orphan", "all_hold", "verified"):
            if key in payload:
                return str(payload[key])
        certificate = payload.get("certificate")
        if isinstance(certificate, dict) and "verified" in certificate:
            return str(certificate["verified"])
        return "n/a"

    def record(self, kind: str, payload: Dict[str, Any]) -> str:
        """
        Write a certificate and index it

        Returns:
            The certificate id, also the stem of its file name
        """
        cert_id = f"{kind}_{int(time.time() * 1000)}"
        # ids must stay unique when two records land in the same millisecond
        suffix = 0
        while (self.storage_dir / f"{cert_id}.json").exists():
            suffix += 1
            cert_id = f"{kind}_{int(time.time() * 1000)}_{suffix}"

        path = self.storage_dir / f"{cert_id}.json"
        with open(path, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)

        verdict = self._verdict_of(payload)
        self.ledger["certificates"].append({
            "id": cert_id,
            "timestamp": datetime.now().isoformat(),
            "kind": kind,
            "verdict": verdict,
            "file": path.name,
        })
        summary = self.ledger["summary"]
        summary["total"] += 1
        summary["by_kind"][kind] = summary["by_kind"].get(kind, 0) + 1
        summary["by_verdict"][verdict] = summary["by_verdict"].get(verdict, 0) + 1
        self._save_ledger()
        logger.info("Recorded %s certificate %s (%s)", kind, cert_id, verdict)
        return cert_id

    def summary(self) -> Dict[str, Any]:
        return self.ledger["summary"]

    def load(self, cert_id: str) -> Optional[Dict[str, Any]]:
        """Load a recorded certificate by id"""
        for entry in self.ledger["certificates"]:
            if entry["id"] == cert_id:
                with open(self.storage_dir / entry["file"], "r") as f:
                    return json.load(f)
        return None

    def recent(self, limit: int = 10) -> List[Dict[str, Any]]:
        entries = self.ledger["certificates"]
        return entries[-limit:] if entries else []
