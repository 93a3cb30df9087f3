from typing import List

from pydantic import BaseModel


class Finding(BaseModel):
    rule: str
    severity: str
    line: int
    column: int
    message: str
    doc_hint: str = ""


class Report(BaseModel):
    findings: List[Finding]
    errors: int
    warnings: int
    infos: int

    @classmethod
    def from_report(cls, report):
        errors, warnings, infos = report.counts
        return cls(
            findings=[Finding(**vars(f)) for f in report.findings],
            errors=errors, warnings=warnings, infos=infos,
        )
