import json
import logging
from pathlib import Path
from typing import Any, Dict, List

from suslov_lab.models.reports import RunManifest

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


class ManifestManager:
    """Writes and finds the reproducibility manifests stored next to lab outputs"""

    def manifest_path(self, output: str | Path) -> Path:
        output = Path(output)
        return output.with_name(output.name + MANIFEST_SUFFIX)

    def create_manifest(
        self,
        command: str,
        config: Dict[str, Any],
        outputs: List[str | Path],
        summary: Dict[str, Any] | None = None,
    ) -> str:
        """
        Record one lab invocation next to its primary output

        Args:
            command: Subcommand that produced the outputs
            config: Configuration the outputs were produced with
            outputs: Written files, the first one names the manifest
            summary: JSON-ready summary of the run or study

        Returns:
            Path to the manifest file
        """
        manifest = RunManifest(
            command=command,
            config=config,
            outputs=[str(p) for p in outputs],
            summary=summary or {},
        )
        path = self.manifest_path(outputs[0])
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(manifest.model_dump(mode="json"), f, indent=2)
        logger.info("manifest written: %s", path)
        return str(path)

    def load_manifest(self, path: str | Path) -> RunManifest:
        with open(path, "r") as f:
            return RunManifest.model_validate(json.load(f))

    def list_manifests(self, directory: str | Path) -> List[Dict]:
        """All readable manifests in ``directory``, newest first"""
        manifests = []
        for manifest_file in Path(directory).glob(f"*{MANIFEST_SUFFIX}"):
            try:
                manifest = self.load_manifest(manifest_file)
            except (OSError, ValueError) as e:
                logger.warning("could not read %s: %s", manifest_file, e)
                continue
            manifests.append({
                "path": str(manifest_file),
                "command": manifest.command,
                "timestamp": manifest.timestamp,
                "datetime": manifest.created_at.isoformat(),
                "num_outputs": len(manifest.outputs),
            })
        manifests.sort(key=lambda m: m["datetime"], reverse=True)
        return manifests

    def get_latest_manifest(self, directory: str | Path) -> str | None:
        """Path to the most recent manifest in ``directory``"""
        manifests = self.list_manifests(directory)
        if manifests:
            return manifests[0]["path"]
        return None
