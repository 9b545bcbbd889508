"""Mood-state analytics over ensemble emotion predictions: subject-dependent
euthymic z-normalization, manic-vs-depressed contrasts, emotion/severity
correlations, between-subject ANOVA with Tukey-Kramer pairs, and the
within-call variance check.

Only assessment-call segments enter the analysis: every segment inherits the
HamD/YMRS scores (and hence the mood label) of its call's linked assessment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import Manifest, MoodLabel
from .metrics import UndefinedMetricError, pcc
from .stats import (
    AnovaResult,
    DegenerateStatisticError,
    TTestResult,
    TukeyKramerResult,
    one_way_anova,
    pearson_significance,
    tukey_kramer,
    welch_ttest,
)

__all__ = [
    "DIMENSIONS", "EnsemblePrediction", "ensemble_predict", "SegmentRow",
    "link_predictions", "EuthymicStats", "euthymic_normalize", "StateContrast",
    "state_contrast", "severity_correlation", "subject_anova",
    "within_call_variance", "MoodReport", "build_mood_report",
]

DIMENSIONS = ("activation", "valence")
ALPHA = 0.01
MIN_EUTHYMIC_SEGMENTS = 2


@dataclass(frozen=True)
class EnsemblePrediction:
    segment_id: str
    activation: float
    valence: float
    member_activation: tuple[float, ...]
    member_valence: tuple[float, ...]


def ensemble_predict(features: Mapping[str, object],
                     members: Mapping[str, Sequence],
                     expected_members: int = 30) -> list[EnsemblePrediction]:
    """Mean over the cross-validation member models, per segment per dimension.

    ``members`` maps each dimension to its model list; a short ensemble is a
    hard error because the member count is part of the analysis contract.
    """
    for dim in DIMENSIONS:
        got = len(members.get(dim, ()))
        if got != expected_members:
            raise ValueError(f"{dim}: expected {expected_members} ensemble members, got {got}")
    seg_ids = list(features.keys())
    xs = [features[s] for s in seg_ids]
    outputs = {dim: np.stack([np.asarray(m.predict(xs), dtype=float) for m in members[dim]])
               for dim in DIMENSIONS}
    preds = []
    for i, seg_id in enumerate(seg_ids):
        act = outputs["activation"][:, i]
        val = outputs["valence"][:, i]
        preds.append(EnsemblePrediction(
            segment_id=seg_id,
            activation=float(act.mean()), valence=float(val.mean()),
            member_activation=tuple(float(v) for v in act),
            member_valence=tuple(float(v) for v in val),
        ))
    return preds


@dataclass
class SegmentRow:
    segment_id: str
    call_id: str
    subject_id: str
    hamd: int
    ymrs: int
    mood: MoodLabel
    values: dict                                # dimension -> prediction


def link_predictions(manifest: Manifest, predictions: Mapping[str, Mapping[str, float]]) -> list[SegmentRow]:
    """Join segment predictions with their call's assessment scores.

    Segments of personal calls (no linked assessment) are skipped; segments
    without predictions are skipped.
    """
    calls = {c.call_id: c for c in manifest.calls}
    assessments = {a.assessment_id: a for a in manifest.assessments}
    rows = []
    for seg in manifest.segments:
        pred = predictions.get(seg.segment_id)
        if pred is None:
            continue
        call = calls[seg.call_id]
        if call.linked_assessment_id is None:
            continue
        a = assessments[call.linked_assessment_id]
        rows.append(SegmentRow(
            segment_id=seg.segment_id, call_id=call.call_id, subject_id=call.subject_id,
            hamd=a.hamd, ymrs=a.ymrs, mood=a.mood,
            values={dim: float(pred[dim]) for dim in DIMENSIONS},
        ))
    return rows


@dataclass(frozen=True)
class EuthymicStats:
    subject_id: str
    mean: dict
    std: dict
    n_segments: int


def euthymic_normalize(rows: Sequence[SegmentRow]) -> tuple[list[SegmentRow], dict, dict]:
    """Per-subject z-normalization against the subject's own euthymic baseline.

    Returns (normalized rows, stats by subject, exclusions by subject).
    A subject is excluded when it has fewer than 2 euthymic segments or zero
    variance in either dimension; excluded subjects drop out of the returned
    rows but are reported with an explicit reason.
    """
    by_subject: dict[str, list[SegmentRow]] = {}
    for r in rows:
        by_subject.setdefault(r.subject_id, []).append(r)
    normalized: list[SegmentRow] = []
    stats: dict[str, EuthymicStats] = {}
    excluded: dict[str, str] = {}
    for subject_id, srows in sorted(by_subject.items()):
        euth = [r for r in srows if r.mood is MoodLabel.EUTHYMIC]
        if len(euth) < MIN_EUTHYMIC_SEGMENTS:
            excluded[subject_id] = f"only {len(euth)} euthymic segments (need >= {MIN_EUTHYMIC_SEGMENTS})"
            continue
        mean = {}
        std = {}
        degenerate = None
        for dim in DIMENSIONS:
            vals = np.array([r.values[dim] for r in euth])
            mean[dim] = float(vals.mean())
            std[dim] = float(vals.std())
            if std[dim] == 0.0:
                degenerate = dim
        if degenerate is not None:
            excluded[subject_id] = f"zero euthymic variance in {degenerate}"
            continue
        stats[subject_id] = EuthymicStats(subject_id=subject_id, mean=mean, std=std,
                                          n_segments=len(euth))
        for r in srows:
            normalized.append(SegmentRow(
                segment_id=r.segment_id, call_id=r.call_id, subject_id=r.subject_id,
                hamd=r.hamd, ymrs=r.ymrs, mood=r.mood,
                values={dim: (r.values[dim] - mean[dim]) / std[dim] for dim in DIMENSIONS},
            ))
    return normalized, stats, excluded


@dataclass(frozen=True)
class StateContrast:
    subject_id: str
    dimension: str
    mean_manic: Optional[float]
    mean_depressed: Optional[float]
    test: Optional[TTestResult]
    note: str = ""

    @property
    def significant(self) -> bool:
        return self.test is not None and self.test.p_value < ALPHA


def state_contrast(rows: Sequence[SegmentRow]) -> dict:
    """Per-subject manic vs depressed means with a two-sided Welch t-test.

    Subjects lacking one state get a dash (None mean) and no test; a state
    with fewer than 2 segments reports its mean but the test is omitted.
    """
    by_subject: dict[str, list[SegmentRow]] = {}
    for r in rows:
        by_subject.setdefault(r.subject_id, []).append(r)
    out: dict[str, dict[str, StateContrast]] = {}
    for subject_id, srows in sorted(by_subject.items()):
        manic = [r for r in srows if r.mood is MoodLabel.MANIC]
        depressed = [r for r in srows if r.mood is MoodLabel.DEPRESSED]
        out[subject_id] = {}
        for dim in DIMENSIONS:
            mv = np.array([r.values[dim] for r in manic])
            dv = np.array([r.values[dim] for r in depressed])
            test = None
            note = ""
            if mv.size == 0 or dv.size == 0:
                missing = "manic" if mv.size == 0 else "depressed"
                note = f"no {missing} segments"
            elif mv.size < 2 or dv.size < 2:
                note = "a state has < 2 segments; test omitted"
            else:
                try:
                    test = welch_ttest(mv, dv)
                except DegenerateStatisticError as e:
                    note = str(e)
            out[subject_id][dim] = StateContrast(
                subject_id=subject_id, dimension=dim,
                mean_manic=float(mv.mean()) if mv.size else None,
                mean_depressed=float(dv.mean()) if dv.size else None,
                test=test, note=note,
            )
    return out


def severity_correlation(rows: Sequence[SegmentRow]) -> dict:
    """Per-subject PCC between each emotion dimension and YMRS / HamD.

    Correlations are segment-level; significance via the t transform with
    n - 2 degrees of freedom.  Zero-variance series are reported undefined.
    """
    by_subject: dict[str, list[SegmentRow]] = {}
    for r in rows:
        by_subject.setdefault(r.subject_id, []).append(r)
    out: dict = {}
    for subject_id, srows in sorted(by_subject.items()):
        out[subject_id] = {}
        for dim in DIMENSIONS:
            preds = np.array([r.values[dim] for r in srows])
            for scale, scores in (("ymrs", np.array([r.ymrs for r in srows], dtype=float)),
                                  ("hamd", np.array([r.hamd for r in srows], dtype=float))):
                entry: dict = {"n": int(preds.size)}
                if preds.size < 3:
                    entry["undefined"] = "fewer than 3 segments"
                else:
                    try:
                        r_val = pcc(preds, scores)
                        test = pearson_significance(r_val, preds.size)
                        entry.update({"pcc": r_val, "t": test.statistic, "df": test.df,
                                      "p": test.p_value, "significant": test.p_value < ALPHA})
                    except UndefinedMetricError as e:
                        entry["undefined"] = str(e)
                out[subject_id][(dim, scale)] = entry
    return out


def subject_anova(rows: Sequence[SegmentRow]) -> dict:
    """Between-subject one-way ANOVA per dimension plus Tukey-Kramer pairs."""
    by_subject: dict[str, list[float]] = {}
    order: list[str] = []
    for r in rows:
        if r.subject_id not in by_subject:
            order.append(r.subject_id)
            by_subject[r.subject_id] = []
    out: dict = {}
    for dim in DIMENSIONS:
        groups = []
        subjects = []
        for s in sorted(order):
            vals = [r.values[dim] for r in rows if r.subject_id == s]
            if len(vals) >= 2:
                groups.append(vals)
                subjects.append(s)
        if len(groups) < 2:
            raise ValueError("ANOVA needs >= 2 subjects with >= 2 segments each")
        anova = one_way_anova(groups)
        tk = tukey_kramer(anova, alpha=ALPHA)
        out[dim] = {"subjects": subjects, "anova": anova, "tukey": tk}
    return out


def within_call_variance(rows: Sequence[SegmentRow]) -> dict:
    """PCC between the within-call variance of predictions and HamD / YMRS.

    Calls with a single segment carry no variance and are excluded.
    """
    by_call: dict[str, list[SegmentRow]] = {}
    for r in rows:
        by_call.setdefault(r.call_id, []).append(r)
    out: dict = {}
    for dim in DIMENSIONS:
        variances = []
        hamds = []
        ymrss = []
        for call_id, crows in sorted(by_call.items()):
            if len(crows) < 2:
                continue
            vals = np.array([r.values[dim] for r in crows])
            variances.append(float(vals.var(ddof=1)))
            hamds.append(float(crows[0].hamd))
            ymrss.append(float(crows[0].ymrs))
        entry: dict = {"n_calls": len(variances)}
        if len(variances) < 3:
            entry["undefined"] = "fewer than 3 multi-segment calls"
        else:
            v = np.asarray(variances)
            for scale, scores in (("hamd", np.asarray(hamds)), ("ymrs", np.asarray(ymrss))):
                try:
                    r_val = pcc(v, scores)
                    test = pearson_significance(r_val, v.size)
                    entry[scale] = {"pcc": r_val, "p": test.p_value,
                                    "significant": test.p_value < ALPHA}
                except UndefinedMetricError as e:
                    entry[scale] = {"undefined": str(e)}
        out[dim] = entry
    return out


@dataclass
class MoodReport:
    euthymic_stats: dict
    excluded_subjects: dict
    contrasts: dict
    correlations: dict
    anova: dict
    call_variance: dict

    def to_dict(self) -> dict:
        def tt(t: Optional[TTestResult]):
            if t is None:
                return None
            return {"t": t.statistic, "df": t.df, "p": t.p_value}

        contrasts = {}
        for subject, dims in self.contrasts.items():
            contrasts[subject] = {
                dim: {"mean_manic": c.mean_manic, "mean_depressed": c.mean_depressed,
                      "test": tt(c.test), "significant": c.significant, "note": c.note}
                for dim, c in dims.items()
            }
        correlations = {}
        for subject, entries in self.correlations.items():
            correlations[subject] = {f"{dim}_vs_{scale}": entry
                                     for (dim, scale), entry in entries.items()}
        anova = {}
        for dim, entry in self.anova.items():
            a: AnovaResult = entry["anova"]
            tk: TukeyKramerResult = entry["tukey"]
            anova[dim] = {
                "subjects": entry["subjects"],
                "f": a.f_statistic, "p": a.p_value,
                "df_between": a.df_between, "df_within": a.df_within,
                "significant": a.p_value < ALPHA,
                "tukey_critical_q": tk.critical_value,
                "tukey_candidate_pairs": tk.n_candidate_pairs,
                "tukey_significant_pairs": [
                    {"pair": [entry["subjects"][i], entry["subjects"][j]],
                     "q": tk.q_statistics[(i, j)]}
                    for i, j in tk.significant_pairs],
            }
        return {
            "euthymic_stats": {s: {"mean": st.mean, "std": st.std, "n_segments": st.n_segments}
                               for s, st in self.euthymic_stats.items()},
            "excluded_subjects": self.excluded_subjects,
            "state_contrasts": contrasts,
            "severity_correlations": correlations,
            "subject_anova": anova,
            "within_call_variance": self.call_variance,
        }

    def render_text(self) -> str:
        """Plain-text tables: state contrasts and severity correlations per
        subject, a '*' marking significance at p < 0.01."""
        subjects = sorted(self.contrasts.keys())
        lines = []

        def fmt(value: Optional[float], significant: bool) -> str:
            if value is None:
                return "-"
            return f"{value:.2f}" + ("*" if significant else "")

        width = max([len(s) for s in subjects] + [6]) + 1
        header = "measure".ljust(34) + "".join(s.rjust(width) for s in subjects)
        lines.append("State contrasts (euthymic-normalized; * = t-test p < 0.01)")
        lines.append(header)
        for dim in DIMENSIONS:
            for state, attr in (("mania", "mean_manic"), ("depression", "mean_depressed")):
                row = f"mean {dim} ({state})".ljust(34)
                for s in subjects:
                    c = self.contrasts[s][dim]
                    row += fmt(getattr(c, attr), c.significant).rjust(width)
                lines.append(row)
        lines.append("")
        lines.append("Severity correlations (* = p < 0.01)")
        lines.append(header)
        for dim in DIMENSIONS:
            for scale in ("ymrs", "hamd"):
                row = f"pcc {dim} vs {scale.upper()}".ljust(34)
                for s in subjects:
                    entry = self.correlations.get(s, {}).get((dim, scale), {})
                    if "pcc" in entry:
                        row += fmt(entry["pcc"], entry["significant"]).rjust(width)
                    else:
                        row += "n/a".rjust(width)
                lines.append(row)
        lines.append("")
        for dim, entry in self.anova.items():
            a = entry["anova"]
            tk = entry["tukey"]
            lines.append(
                f"ANOVA {dim}: F({a.df_between},{a.df_within}) = {a.f_statistic:.2f}, "
                f"p = {a.p_value:.3g}; Tukey-Kramer significant pairs: "
                f"{len(tk.significant_pairs)}/{tk.n_candidate_pairs}")
        for dim, entry in self.call_variance.items():
            if "undefined" in entry:
                lines.append(f"Within-call variance {dim}: {entry['undefined']}")
            else:
                bits = []
                for scale in ("hamd", "ymrs"):
                    e = entry[scale]
                    bits.append(f"{scale.upper()} pcc = {e['pcc']:.3f} (p = {e['p']:.3g})"
                                if "pcc" in e else f"{scale.upper()} undefined")
                lines.append(f"Within-call variance {dim} vs " + ", ".join(bits))
        return "\n".join(lines) + "\n"


def build_mood_report(manifest: Manifest, predictions: Mapping[str, Mapping[str, float]]) -> MoodReport:
    """Full analysis pipeline from raw ensemble predictions to the report."""
    rows = link_predictions(manifest, predictions)
    normalized, stats, excluded = euthymic_normalize(rows)
    if not normalized:
        raise ValueError("no subjects survived euthymic normalization")
    return MoodReport(
        euthymic_stats=stats,
        excluded_subjects=excluded,
        contrasts=state_contrast(normalized),
        correlations=severity_correlation(normalized),
        anova=subject_anova(normalized),
        call_variance=within_call_variance(normalized),
    )
