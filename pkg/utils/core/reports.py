"""Pass/fail report records shared by verification operations"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class CheckReport:
    name: str
    passed: bool
    counterexample: Optional[Dict[str, Any]] = None
    details: Dict[str, Any] = field(default_factory=dict)
    # criterion known to fail this check (e.g. Imitate-if-Better under SF)
    expected_fail: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "expected_fail": self.expected_fail,
            "counterexample": self.counterexample,
            "details": self.details,
        }


def all_passed(reports: List[CheckReport]) -> bool:
    """Suite verdict; expected failures count as passes"""
    return all(r.passed or r.expected_fail for r in reports)
