"""Command-line entry point: ``wardsim <subcommand> ...``.

Backends are chosen per role with ``kind:name`` selectors: ``scripted:<fixture id>``
replays a bundled (or ``--fixtures``) response script, ``remote:<descriptor id>``
uses a descriptor from the ``--backends`` JSON file. Credentials come only from
the environment variable named in the descriptor.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .agents import (
    ChiefPhysicianAgent,
    DoctorAgent,
    ExaminerAgent,
    PatientAgent,
    default_vocabulary,
    rule_extractor_backend,
)
from .assets import attack_queries, corpus_dir, diseases_path, load_script, scripted_backend
from .backends import Backend, BackendDescriptor, BackendKind, RemoteBackend
from .collaboration import CollabConfig, PreDiagnosis, rounds_histogram, run_collaboration
from .engine import NPCBackends, SessionConfig, export_transcripts, run_batch, run_manifest
from .errors import CollaborationError, WardsimError
from .evaluation import (
    SECTIONS,
    DiagnosticReport,
    DiseaseDictionary,
    Section,
    aggregate_scores,
    average_entity_metrics,
    fit_linear,
    load_failure_labels,
    normalize_rubric,
    score_diagnosis,
    tally_failures,
)
from .protocol import ROUTINGS, Role
from .records import MedicalRecord, corpus_stats, load_corpus, load_manifest, partition_views

log = logging.getLogger("wardsim")


class UsageError(Exception):
    """Bad flags or missing inputs; exits with status 2."""


# selectors

@dataclass(frozen=True)
class Selector:
    kind: str
    name: str

    @classmethod
    def parse(cls, text: str) -> Selector:
        kind, sep, name = text.partition(":")
        if text == "rule":
            return cls("rule", "rule")
        if not sep or kind not in ("scripted", "remote") or not name:
            raise UsageError(f"backend selector must be scripted:<id> or remote:<id>, got {text!r}")
        return cls(kind, name)

    def __str__(self) -> str:
        return self.name if self.kind == "rule" else f"{self.kind}:{self.name}"


@dataclass
class BackendFactory:
    fixtures: Path | None = None
    descriptors: dict[str, BackendDescriptor] = field(default_factory=dict)

    def validate(self, sel: Selector) -> None:
        if sel.kind == "scripted":
            try:
                load_script(sel.name, self.fixtures)
            except FileNotFoundError as exc:
                raise UsageError(str(exc)) from None
        elif sel.kind == "remote" and sel.name not in self.descriptors:
            raise UsageError(f"unknown remote descriptor {sel.name!r} (pass --backends)")

    def make(self, sel: Selector, role: str, record_id: str, language: str = "en") -> Backend:
        if sel.kind == "rule":
            return rule_extractor_backend(language=language)
        if sel.kind == "scripted":
            return scripted_backend(sel.name, role, record_id, name=f"{sel.name}:{role}:{record_id}",
                                    directory=self.fixtures)
        return RemoteBackend(self.descriptors[sel.name], name=sel.name)

    def describe(self, sel: Selector) -> dict[str, Any]:
        if sel.kind == "remote":
            return {"selector": str(sel), **self.descriptors[sel.name].to_dict()}
        return {"selector": str(sel), "kind": BackendKind.SCRIPTED.value if sel.kind == "scripted" else "rule"}


def _load_descriptors(path: str | None) -> dict[str, BackendDescriptor]:
    if not path:
        return {}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {k: BackendDescriptor(**{"kind": "remote", **v}) for k, v in data.items()}


def _unique_names(selectors: Sequence[Selector]) -> list[str]:
    names, seen = [], {}
    for s in selectors:
        seen[s.name] = seen.get(s.name, 0) + 1
        names.append(s.name if seen[s.name] == 1 else f"{s.name}#{seen[s.name]}")
    return names


# output helpers

def _write_json(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _resolve_corpus(value: str) -> Path:
    if value == "fixtures":
        return corpus_dir()
    path = Path(value)
    if not path.exists():
        raise UsageError(f"corpus path not found: {value}")
    return path


def _manifest(args: argparse.Namespace, extra: dict[str, Any]) -> dict[str, Any]:
    skip = {"func", "out", "config", "command", "verbose"}
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {"command": args.command, "version": __version__, "args": flags, **extra}


def _report_name(record_id: str, doctor: str) -> str:
    return f"{record_id}__{doctor.replace('/', '_')}.json"


def _read_run(run: Path) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    manifest_path = run / "manifest.json"
    if not manifest_path.is_file():
        raise UsageError(f"{run} has no manifest.json")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    reports = [json.loads(p.read_text(encoding="utf-8")) for p in sorted((run / "reports").glob("*.json"))]
    return manifest, reports


def _corpus_from(args_corpus: str | None, manifest: dict[str, Any]) -> dict[str, MedicalRecord]:
    value = args_corpus or manifest.get("args", {}).get("corpus")
    if not value:
        raise UsageError("no corpus given and none recorded in the run manifest")
    return {r.id: r for r in load_corpus(_resolve_corpus(value))}


# subcommands

def cmd_consult(args: argparse.Namespace, factory: BackendFactory) -> int:
    corpus = load_corpus(_resolve_corpus(args.corpus))
    doctors = [Selector.parse(s) for s in args.doctor.split(",") if s]
    if not doctors:
        raise UsageError("--doctor needs at least one selector")
    if args.patient:
        patient = Selector.parse(args.patient)
    elif doctors[0].kind == "scripted":
        patient = doctors[0]
    else:
        raise UsageError("--patient is required with remote doctors")
    examiner = Selector.parse(args.examiner)
    for s in (*doctors, patient, examiner):
        if s.kind != "rule":
            factory.validate(s)
    routing = ROUTINGS[args.routing or ("zh" if args.language == "zh" else "default")]
    config = SessionConfig(max_rounds=args.max_rounds, routing=routing, language=args.language)
    names = _unique_names(doctors)

    results = []
    for sel, name in zip(doctors, names):
        def doctor_factory(record: MedicalRecord, seed: int, sel=sel, name=name) -> DoctorAgent:
            return DoctorAgent(factory.make(sel, "doctor", record.id), name, args.language, routing,
                               config.params_for(Role.DOCTOR, seed))

        def npc_factory(record: MedicalRecord, seed: int) -> NPCBackends:
            ex = None if examiner.kind == "rule" else factory.make(examiner, "examiner", record.id)
            return NPCBackends(factory.make(patient, "patient", record.id), ex)

        results += run_batch(corpus, doctor_factory, config, npc_factory, args.parallelism, args.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "transcripts.jsonl").write_text(export_transcripts(results), encoding="utf-8")
    (out / "sessions.jsonl").write_text(
        "".join(json.dumps(r.to_dict(), ensure_ascii=False) + "\n" for r in results), encoding="utf-8"
    )
    for r in results:
        _write_json(out / "reports" / _report_name(r.record_id, r.doctor), {
            "record_id": r.record_id, "doctor": r.doctor, "termination": r.termination.value,
            "report_raw": r.report_raw, "report": r.report.to_dict() if r.report else None,
        })
    backends = {f"doctor:{n}": factory.describe(s) for s, n in zip(doctors, names)}
    backends["patient"] = factory.describe(patient)
    backends["examiner"] = factory.describe(examiner)
    manifest = _manifest(args, run_manifest(config, args.seed, [r.id for r in corpus], backends,
                                            {"doctors": names}))
    _write_json(out / "manifest.json", manifest)
    aborted = sum(r.termination.value == "Aborted" for r in results)
    print(f"{len(results)} sessions written to {out} ({aborted} aborted)")
    return 0


def _report_from(d: dict[str, Any] | None) -> DiagnosticReport | None:
    if not d:
        return None
    return DiagnosticReport.from_sections({Section(k): v for k, v in d.items()})


def cmd_collab(args: argparse.Namespace, factory: BackendFactory) -> int:
    pre_dir = Path(args.pre)
    manifest, reports = _read_run(pre_dir)
    pre_doctors: list[str] = manifest.get("doctors", [])
    doctors = [Selector.parse(s) for s in args.doctors.split(",") if s]
    # ids of the discussing doctors and the pre-run doctor whose report seeds each of them
    if len(doctors) == len(pre_doctors):
        ids, seed_from = list(pre_doctors), dict(zip(pre_doctors, pre_doctors))
    elif len(pre_doctors) == 1:
        ids = _unique_names(doctors)
        seed_from = {d: pre_doctors[0] for d in ids}
        log.warning("single pre-diagnosis doctor %s seeds all %d discussing doctors", pre_doctors[0], len(ids))
    else:
        raise UsageError(f"{len(doctors)} doctor selectors for {len(pre_doctors)} pre-diagnosis doctors {pre_doctors}")
    chief_sel = Selector.parse(args.chief)
    patient_sel = Selector.parse(args.patient) if args.patient else None
    for s in (*doctors, chief_sel, *( [patient_sel] if patient_sel else [])):
        factory.validate(s)
    args.corpus = args.corpus or manifest.get("args", {}).get("corpus")
    corpus = _corpus_from(args.corpus, manifest)
    config = CollabConfig(M=args.M, dispute_resolution=not args.no_dispute_resolution,
                          language=args.language, parallelism=args.parallelism)
    by_record: dict[str, dict[str, DiagnosticReport | None]] = {}
    for rep in reports:
        by_record.setdefault(rep["record_id"], {})[rep["doctor"]] = _report_from(rep.get("report"))

    out = Path(args.out) if args.out else pre_dir / "collab"
    traces, results = [], []
    for record_id in sorted(by_record):
        got = by_record[record_id]
        usable = {d: got[seed_from[d]] for d in ids if got.get(seed_from[d]) is not None}
        for d in ids:
            if d not in usable:
                log.warning("%s: doctor %s has no parseable pre-diagnosis; excluded", record_id, d)
        if not usable:
            traces.append({"record_id": record_id, "error": "no parseable pre-diagnosis"})
            continue
        record = corpus.get(record_id)
        sel_for = dict(zip(ids, doctors))
        backends = {d: factory.make(sel_for[d], "doctor", record_id) for d in usable}
        chief = ChiefPhysicianAgent(factory.make(chief_sel, "chief", record_id), None, args.language)
        patient = examiner = None
        if record is not None:
            views = partition_views(record, args.language)
            examiner = ExaminerAgent(views.examiner_view, rule_extractor_backend(language=args.language),
                                     args.language)
            if patient_sel:
                patient = PatientAgent(views.patient_view, factory.make(patient_sel, "patient", record_id),
                                       language=args.language)
        try:
            res = run_collaboration(PreDiagnosis(usable), config, chief, backends, patient, examiner)
        except CollaborationError as exc:
            traces.append({"record_id": record_id, "error": f"{type(exc.cause).__name__}: {exc.cause}",
                           "history_kinds": exc.history.kinds()})
            continue
        results.append(res)
        traces.append(res.to_trace(record_id))
        _write_json(out / "reports" / _report_name(record_id, "collab"), {
            "record_id": record_id, "doctor": "collab", "report": res.final_report.to_dict(),
        })
    _write_json(out / "collab_trace.json", traces)
    hist = rounds_histogram(results, config.M)
    _write_csv(out / "histogram.csv", ["rounds", "count"], list(hist.items()))
    descr = {f"doctor:{d}": factory.describe(s) for d, s in zip(ids, doctors)}
    descr["chief"] = factory.describe(chief_sel)
    _write_json(out / "manifest.json", _manifest(args, {
        "collab_config": config.to_dict(), "backends": descr, "doctors": ["collab"],
        "pre_manifest": manifest.get("args", {}), "template_ids": ["collab_doctor", "moderator", "moderator_probe",
                                                                     "fact_consolidate", "fact_synthesize", "finalize"],
    }))
    print(f"{len(results)} collaborations written to {out}; histogram {hist}")
    return 0


def _entity_rows(reports, corpus, dictionary):
    rows, per_doctor = [], {}
    for rep in reports:
        report = _report_from(rep.get("report"))
        record = corpus.get(rep["record_id"])
        if report is None or record is None:
            continue
        m = score_diagnosis(report.results, record.reference.results, dictionary)
        per_doctor.setdefault(rep["doctor"], []).append(m)
        rows.append([rep["record_id"], rep["doctor"], m.count, m.precision, m.recall, m.f1])
    return rows, per_doctor


def cmd_evaluate(args: argparse.Namespace, factory: BackendFactory) -> int:
    run = Path(args.run)
    manifest, reports = _read_run(run)
    judge_sel = Selector.parse(args.judge)
    factory.validate(judge_sel)
    corpus = _corpus_from(args.corpus, manifest)
    dictionary = DiseaseDictionary.load(args.dictionary or diseases_path())
    out = Path(args.out) if args.out else run / "evaluation"

    score_rows, skipped = [], []
    normalized: dict[str, dict[Section, list[float]]] = {}
    for rep in reports:
        report = _report_from(rep.get("report"))
        record = corpus.get(rep["record_id"])
        if report is None or record is None:
            skipped.append({"record_id": rep["record_id"], "doctor": rep["doctor"],
                            "reason": "no parsed report" if report is None else "record not in corpus"})
            continue
        judge = ChiefPhysicianAgent(factory.make(judge_sel, "judge", record.id), record, args.language)
        scores = judge.judge(report)
        for dim in SECTIONS:
            s = scores.score(dim)
            n = normalize_rubric(s)
            normalized.setdefault(rep["doctor"], {}).setdefault(dim, []).append(n)
            score_rows.append([rep["record_id"], rep["doctor"], dim.value, s, n])
    entity_rows, per_doctor = _entity_rows(reports, corpus, dictionary)

    aggregate: dict[str, Any] = {"B": args.B, "seed": args.seed, "skipped": skipped, "doctors": {}}
    for doctor, dims in normalized.items():
        aggregate["doctors"][doctor] = {
            dim.value: aggregate_scores(vals, args.B, args.seed).to_dict() for dim, vals in dims.items()
        }
        if doctor in per_doctor:
            aggregate["doctors"][doctor]["entity"] = average_entity_metrics(per_doctor[doctor]).to_dict()
    _write_csv(out / "scores.csv", ["record_id", "doctor", "dimension", "score", "normalized"], score_rows)
    _write_csv(out / "entities.csv", ["record_id", "doctor", "count", "precision", "recall", "f1"], entity_rows)
    _write_json(out / "aggregate.json", aggregate)
    _write_json(out / "manifest.json", _manifest(args, {"backends": {"judge": factory.describe(judge_sel)},
                                                        "template_ids": ["judge", "judge_input"]}))
    print(f"scored {len(score_rows) // len(SECTIONS)} reports ({len(skipped)} skipped) into {out}")
    return 0


def cmd_link_eval(args: argparse.Namespace, factory: BackendFactory) -> int:
    run = Path(args.run)
    manifest, reports = _read_run(run)
    corpus = _corpus_from(args.corpus, manifest)
    dictionary = DiseaseDictionary.load(args.dictionary or diseases_path())
    rows, per_doctor = _entity_rows(reports, corpus, dictionary)
    summary = {d: average_entity_metrics(ms, args.average).to_dict() for d, ms in per_doctor.items()}
    out = Path(args.out) if args.out else run / "linking"
    _write_csv(out / "entities.csv", ["record_id", "doctor", "count", "precision", "recall", "f1"], rows)
    _write_json(out / "aggregate.json", {"average": args.average, "doctors": summary})
    _write_json(out / "manifest.json", _manifest(args, {}))
    print(json.dumps(summary, indent=2))
    return 0


def cmd_stats(args: argparse.Namespace, factory: BackendFactory) -> int:
    if bool(args.corpus) == bool(args.manifest):
        raise UsageError("give exactly one of --corpus or --manifest")
    if args.manifest and not Path(args.manifest).exists():
        raise UsageError(f"manifest not found: {args.manifest}")
    items = load_manifest(args.manifest) if args.manifest else load_corpus(_resolve_corpus(args.corpus))
    hist = corpus_stats(items)
    result = {"counts": dict(hist.counts), "total": hist.total}
    print(json.dumps(result, indent=2, ensure_ascii=False))
    if args.out:
        out = Path(args.out)
        _write_json(out / "stats.json", result)
        _write_json(out / "manifest.json", _manifest(args, {}))
    return 0


REGRESSORS = (Section.SYMPTOMS, Section.EXAMINATIONS)
TARGETS = (Section.RESULTS, Section.RATIONALES, Section.TREATMENT)


def _score_points(path: Path, by: str) -> dict[str, dict[Section, float]]:
    sums: dict[str, dict[Section, list[float]]] = {}
    with path.open(encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = row["doctor"] if by == "doctor" else f"{row['record_id']}/{row['doctor']}"
            sums.setdefault(key, {}).setdefault(Section(row["dimension"]), []).append(float(row["normalized"]))
    return {k: {d: sum(v) / len(v) for d, v in dims.items()} for k, dims in sums.items()}


def cmd_analyze(args: argparse.Namespace, factory: BackendFactory) -> int:
    if not args.scores and not args.labels:
        raise UsageError("give --scores and/or --labels")
    result: dict[str, Any] = {}
    if args.scores:
        if not Path(args.scores).is_file():
            raise UsageError(f"scores file not found: {args.scores}")
        points = _score_points(Path(args.scores), args.by)
        fits = {}
        for x in REGRESSORS:
            for y in TARGETS:
                keys = [k for k in points if x in points[k] and y in points[k]]
                fit = fit_linear([points[k][x] for k in keys], [points[k][y] for k in keys])
                fits[f"{y.value}~{x.value}"] = {"slope": fit.slope, "intercept": fit.intercept, "r": fit.r,
                                                "n": len(keys)}
        result["regression"] = {"by": args.by, "fits": fits}
    if args.labels:
        if not Path(args.labels).is_file():
            raise UsageError(f"label file not found: {args.labels}")
        tally = tally_failures(load_failure_labels(args.labels))
        result["failures"] = {label.value: n for label, n in tally.items()}
        result["failures_total"] = sum(tally.values())
    print(json.dumps(result, indent=2))
    if args.out:
        _write_json(Path(args.out) / "analysis.json", result)
        _write_json(Path(args.out) / "manifest.json", _manifest(args, {}))
    return 0


def cmd_attack_examiner(args: argparse.Namespace, factory: BackendFactory) -> int:
    queries = attack_queries(args.queries)
    corpus = load_corpus(_resolve_corpus(args.corpus))
    record = next((r for r in corpus if r.id == args.record), None) if args.record else corpus[0]
    if record is None:
        raise UsageError(f"record {args.record!r} not in corpus")
    sel = Selector.parse(args.extractor)
    if sel.kind != "rule":
        factory.validate(sel)
    view = partition_views(record, args.language).examiner_view
    finding_values = [v for e in view for _, v in e.findings if v.strip()]
    rows = []
    for q in queries:
        backend = factory.make(sel, "examiner", record.id, args.language)
        examiner = ExaminerAgent(view, backend, args.language, default_vocabulary())
        reply, items = examiner.respond(q)
        leaked = [v for v in finding_values if v in reply]
        rows.append({"query": q, "items": [i.name for i in items], "findings_emitted": len(leaked),
                     "defended": not items and not leaked})
    defended = sum(r["defended"] for r in rows)
    summary = {"record_id": record.id, "queries": len(rows), "defended": defended,
               "rate": defended / len(rows) if rows else 1.0}
    print(f"defended {defended}/{len(rows)}")
    if args.out:
        out = Path(args.out)
        _write_json(out / "attack.json", {"summary": summary, "queries": rows})
        _write_json(out / "manifest.json", _manifest(args, {"backends": {"examiner": factory.describe(sel)}}))
    return 0 if defended == len(rows) else 1


# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wardsim", description="Simulated clinical consultations and their evaluation.")
    p.add_argument("--version", action="version", version=f"wardsim {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose values override flags")
    common.add_argument("--out", help="output directory")
    common.add_argument("--language", choices=("en", "zh"), default="en")
    common.add_argument("--fixtures", help="directory of scripted response fixtures")
    common.add_argument("--backends", help="JSON file of remote backend descriptors")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--parallelism", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("consult", parents=[common], help="run consultations over a corpus")
    c.add_argument("--corpus", required=True, help="record directory or JSONL ('fixtures' for the bundled set)")
    c.add_argument("--doctor", required=True, help="comma-separated doctor selectors")
    c.add_argument("--patient", help="patient selector (defaults to the first scripted doctor fixture)")
    c.add_argument("--examiner", default="rule", help="examiner extractor selector (default: rule)")
    c.add_argument("--max-rounds", type=int, default=10)
    c.add_argument("--routing", choices=sorted(ROUTINGS))
    c.set_defaults(func=cmd_consult)

    c = sub.add_parser("collab", parents=[common], help="multi-doctor discussion over a consult run")
    c.add_argument("--pre", required=True, help="consult output directory holding the pre-diagnoses")
    c.add_argument("--doctors", required=True, help="comma-separated doctor selectors, in pre-diagnosis order")
    c.add_argument("--chief", required=True)
    c.add_argument("--patient", help="patient selector for fact confirmation")
    c.add_argument("--corpus")
    c.add_argument("-M", type=int, default=4, dest="M", help="maximum discussion rounds")
    c.add_argument("--no-dispute-resolution", action="store_true")
    c.set_defaults(func=cmd_collab)

    c = sub.add_parser("evaluate", parents=[common], help="rubric and entity scoring of a run")
    c.add_argument("--run", required=True)
    c.add_argument("--judge", required=True)
    c.add_argument("--dictionary")
    c.add_argument("--corpus")
    c.add_argument("-B", type=int, default=1000, dest="B", help="bootstrap resamples")
    c.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("link-eval", parents=[common], help="entity-level diagnosis metrics of a run")
    c.add_argument("--run", required=True)
    c.add_argument("--dictionary")
    c.add_argument("--corpus")
    c.add_argument("--average", choices=("macro", "micro"), default="macro")
    c.set_defaults(func=cmd_link_eval)

    c = sub.add_parser("stats", parents=[common], help="department histogram of a corpus or manifest")
    c.add_argument("--corpus")
    c.add_argument("--manifest")
    c.set_defaults(func=cmd_stats)

    c = sub.add_parser("analyze", parents=[common], help="completeness/quality regression and failure tally")
    c.add_argument("--scores", help="scores.csv written by evaluate")
    c.add_argument("--by", choices=("doctor", "record"), default="doctor")
    c.add_argument("--labels", help="failure label file")
    c.set_defaults(func=cmd_analyze)

    c = sub.add_parser("attack-examiner", parents=[common], help="vague-request suite against the examiner")
    c.add_argument("--queries")
    c.add_argument("--corpus", default="fixtures")
    c.add_argument("--record")
    c.add_argument("--extractor", default="rule")
    c.set_defaults(func=cmd_attack_examiner)
    return p


_REQUIRES_OUT = {"consult"}


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    if not args.config:
        return
    path = Path(args.config)
    if not path.is_file():
        parser.error(f"config file not found: {args.config}")
    data = json.loads(path.read_text(encoding="utf-8"))
    for key, value in data.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            parser.error(f"config key {key!r} is not a flag of {args.command}")
        setattr(args, dest, value)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _apply_config(parser, args)
        if args.command in _REQUIRES_OUT and not args.out:
            raise UsageError(f"{args.command} needs --out")
        if args.parallelism < 1:
            raise UsageError("--parallelism must be >= 1")
        factory = BackendFactory(Path(args.fixtures) if args.fixtures else None, _load_descriptors(args.backends))
        return args.func(args, factory)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"wardsim {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (WardsimError, OSError, KeyError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
