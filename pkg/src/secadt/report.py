"""Final report combining the security-testing and pattern verdicts."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from secadt.testgen import SecurityReport, recommend, recommendation_row
from secadt.verify import GlobalVerdict, PatternVerdict


@dataclass(frozen=True)
class CombinedReport:
    security: SecurityReport
    patterns: GlobalVerdict

    @property
    def vulnerable(self) -> bool:
        return self.security.vulnerable

    @property
    def unsat(self) -> bool:
        return self.patterns.unsat

    @property
    def inconclusive(self) -> bool:
        return self.security.inconclusive

    @property
    def row(self) -> int:
        return recommendation_row(self.vulnerable, self.unsat, self.inconclusive)

    @property
    def recommendation(self) -> str:
        return recommend(self.vulnerable, self.unsat, self.inconclusive)

    def to_dict(self) -> dict:
        security = self.security.to_dict()
        security.pop("recommendation")
        return {
            "vulnerable": self.vulnerable,
            "unsat": self.unsat,
            "inconclusive": self.inconclusive,
            "row": self.row,
            "recommendation": self.recommendation,
            "testing": security,
            "verification": self.patterns.to_dict(),
        }

    def to_text(self) -> str:
        testing = self.security.to_text().rstrip("\n").rsplit("\n\n", 1)[0]
        lines = [
            "Verdict summary",
            f"  Vulnerable(T_f)     {self.vulnerable}",
            f"  Unsat(SP(T_f))      {self.unsat}",
            f"  Inconclusive(T_f)   {self.inconclusive}",
            f"  Recommendation ({self.row}): {self.recommendation}",
            "",
            "Security testing",
            *("  " + line if line else "" for line in testing.splitlines()),
            "",
            "Pattern verification",
            *("  " + line if line else "" for line in self.patterns.to_text().splitlines()),
        ]
        return "\n".join(lines) + "\n"

    def write(self, directory) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        text, data = directory / "report.txt", directory / "report.json"
        text.write_text(self.to_text(), encoding="utf-8")
        data.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return text, data


def emit_report(security: SecurityReport, verdict: GlobalVerdict | PatternVerdict) -> CombinedReport:
    if isinstance(verdict, PatternVerdict):
        verdict = GlobalVerdict({verdict.pattern or "pattern": verdict})
    return CombinedReport(security, verdict)
