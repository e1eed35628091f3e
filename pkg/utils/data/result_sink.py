"""
Abstract base class and factory for result emission
"""
import csv
import io
import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional


def dumps_json(payload: Any) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline"""
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


class ResultSink(ABC):
    """Abstract base class for writing command results"""

    extension: str = ""

    def __init__(self, out_dir: Optional[str] = None):
        self.out_dir = Path(out_dir) if out_dir else None

    @abstractmethod
    def render(self, payload: Any) -> str:
        """
        Turn a result payload into text

        Args:
            payload: Command result (dict, list of rows, or DOT text)

        Returns:
            Text in the sink's format
        """
        pass

    def write(self, name: str, payload: Any) -> Optional[Path]:
        """
        Write a rendered payload under the output directory

        Args:
            name: File stem, e.g. "analyze"
            payload: Command result

        Returns:
            Path written, or None when no output directory is configured
        """
        if self.out_dir is None:
            return None
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / f"{name}.{self.extension}"
        path.write_text(self.render(payload), encoding="utf-8")
        return path


class JsonSink(ResultSink):
    extension = "json"

    def render(self, payload: Any) -> str:
        return dumps_json(payload)


class CsvSink(ResultSink):
    extension = "csv"

    def render(self, payload: Any) -> str:
        rows: List[Dict[str, Any]] = payload if isinstance(payload, list) else payload.get("rows", [])
        if not rows:
            return ""
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buffer.getvalue()


class DotSink(ResultSink):
    extension = "dot"

    def render(self, payload: Any) -> str:
        if isinstance(payload, str):
            return payload
        if isinstance(payload, dict) and "dot" in payload:
            return payload["dot"]
        raise ValueError("DOT output is only available for commands that build a resistance graph")


class ResultSinkFactory:
    """Factory class to create the sink for an output format"""

    @staticmethod
    def create_sink(sink_config: Dict[str, Any]) -> ResultSink:
        """
        Create a result sink based on configuration

        Args:
            sink_config: {"format": "json" | "csv" | "dot", "out_dir": optional directory}

        Returns:
            ResultSink instance
        """
        fmt = sink_config.get("format", "json")
        out_dir = sink_config.get("out_dir")

        if fmt == "json":
            return JsonSink(out_dir)
        elif fmt == "csv":
            return CsvSink(out_dir)
        elif fmt == "dot":
            return DotSink(out_dir)
        else:
            raise ValueError(f"Unknown output format: {fmt}")
