from typing import Any, Dict, List

VERDICTS = ("SAT", "UNSAT", "INDETERMINATE")


class ReportValidator:
    """Checks the JSON reports the command line emits"""

    def validate(self, report: Dict[str, Any], kind: str) -> Dict[str, Any]:
        """
        Validate a report

        Args:
            report: the report dictionary
            kind: verify_paper, search, goe, periodization, trace_report,
                sweep or encoding

        Returns:
            Dictionary with validation results
        """
        if not isinstance(report, dict):
            return self._result(["Report is not a mapping"], [], [])
        handler = getattr(self, f"_validate_{kind}", None)
        if handler is None:
            return self._result([f"Unsupported report kind: {kind}"], [], [])
        errors: List[str] = []
        warnings: List[str] = []
        suggestions: List[str] = []
        handler(report, errors, warnings, suggestions)
        return self._result(errors, warnings, suggestions)

    @staticmethod
    def _result(errors, warnings, suggestions) -> Dict[str, Any]:
        return {
            "valid": len(errors) == 0,
            "errors": errors,
            "warnings": warnings,
            "suggestions": suggestions,
        }

    @staticmethod
    def _require(report: Dict[str, Any], fields: Dict[str, Any], errors: List[str]) -> None:
        for name, kind in fields.items():
            if name not in report:
                errors.append(f"Missing field '{name}'")
            elif not isinstance(report[name], kind):
                errors.append(f"Field '{name}' has type {type(report[name]).__name__}")

    def _validate_verify_paper(self, report, errors, warnings, suggestions):
        self._require(report, {"rule": str, "claims": list, "all_hold": bool}, errors)
        claims = report.get("claims")
        if not isinstance(claims, list):
            return
        if not claims:
            errors.append("No claims were checked")
        for claim in claims:
            if not isinstance(claim, dict) or "name" not in claim or "holds" not in claim:
                errors.append("Claims need a name and a holds flag")
                continue
            if not isinstance(claim["holds"], bool):
                errors.append(f"Claim '{claim['name']}' has a non-boolean verdict")
        if not errors and report["all_hold"] != all(c["holds"] for c in claims):
            errors.append("all_hold disagrees with the individual claims")
        failed = [c["name"] for c in claims if isinstance(c, dict) and c.get("holds") is False]
        if failed:
            warnings.append(f"Failed claims: {', '.join(failed)}")

    def _validate_search(self, report, errors, warnings, suggestions):
        self._require(report, {"verdict": str, "nodes": int}, errors)
        verdict = report.get("verdict")
        if isinstance(verdict, str) and verdict not in VERDICTS:
            errors.append(f"Unknown verdict {verdict}")
        if verdict == "SAT" and not report.get("witness"):
            errors.append("SAT verdict without a witness")
        if verdict == "UNSAT" and report.get("witness"):
            errors.append("UNSAT verdict with a witness")
        if verdict == "INDETERMINATE":
            warnings.append("The search stopped before deciding")
            suggestions.append("Raise --budget-nodes or use --threads to split the search")

    def _validate_goe(self, report, errors, warnings, suggestions):
        self._require(report, {"goe": bool, "padding": int, "constants": dict}, errors)
        provenance = (report.get("constants") or {}).get("provenance") or {}
        if provenance.get("verified") is not True:
            errors.append("GoE verdicts need verified constants")

    def _validate_periodization(self, report, errors, warnings, suggestions):
        self._require(report, {"semilinear": dict, "certificate": dict}, errors)
        semilinear = report.get("semilinear") or {}
        regions = semilinear.get("regions")
        if not isinstance(regions, list) or not regions:
            errors.append("Semilinear configuration has no regions")
        else:
            kinds = [r.get("kind") for r in regions]
            if kinds.count("core") != 1:
                errors.append("Semilinear configuration needs exactly one core region")
            for region in regions:
                expected = {"core": 0, "strip": 1, "quadrant": 2}.get(region.get("kind"))
                if expected is None or len(region.get("periods", [])) != expected:
                    errors.append(f"Region '{region.get('name')}' has the wrong number of periods")
        certificate = report.get("certificate") or {}
        if certificate.get("verified") is not True:
            errors.append("Certificate is not verified")
        bound = (certificate.get("constants") or {}).get("q_refined")
        largest = semilinear.get("max_period")
        if isinstance(bound, int) and isinstance(largest, int) and largest > bound:
            errors.append(f"Period {largest} exceeds the per-flank bound {bound}")
        if isinstance(largest, int) and largest > 6:
            suggestions.append("Large periods usually come from long tail cycles; inspect the continuations")

    def _validate_trace_report(self, report, errors, warnings, suggestions):
        self._require(report, {"n": int, "ell_max": int, "directions": list}, errors)
        for entry in report.get("directions") or []:
            if "rotation" not in entry:
                errors.append("Direction entries need a rotation")
            elif entry.get("stable_at") is None:
                warnings.append(f"Rotation {entry['rotation']} is not stable up to ell_max")

    def _validate_sweep(self, report, errors, warnings, suggestions):
        self._require(report, {"rows": list}, errors)
        rows = report.get("rows")
        if isinstance(rows, list) and not rows:
            warnings.append("Sweep produced no rows")

    def _validate_encoding(self, report, errors, warnings, suggestions):
        self._require(report, {"word": str, "shape": list}, errors)
        word = report.get("word")
        shape = report.get("shape")
        if isinstance(word, str) and isinstance(shape, list) and len(shape) == 2:
            m, n = shape
            if len(word) != m + n + 1 + (2 * m + 1) * (2 * n + 1):
                errors.append("Word length does not match its shape prefix")
