"""Simulated multi-agent clinical consultations with multi-view evaluation."""

__version__ = "0.1.0"

from .agents import (
    ChiefPhysicianAgent,
    DoctorAgent,
    ExaminerAgent,
    ExamItem,
    ExamVocabulary,
    PatientAgent,
    doctor_turn,
    examiner_extract_items,
    examiner_report,
    make_chief_complaint,
    make_persona,
    patient_turn,
    rule_extractor_backend,
    solicit_report,
)
from .backends import (
    AuditLog,
    BackendDescriptor,
    ChatMessage,
    FunctionBackend,
    GenerationParams,
    RemoteBackend,
    ScriptedBackend,
)
from .collaboration import (
    CollabConfig,
    CollabResult,
    DiscussionHistory,
    DisputeList,
    FactSummary,
    PreDiagnosis,
    exchange_facts,
    finalize,
    revise_report,
    run_collaboration,
    summarize_disputes,
)
from .engine import NPCBackends, SessionConfig, SessionResult, Termination, run_batch, run_consultation
from .protocol import Role, RoutingConfig, Transcript, Utterance, parse_utterance, render_utterance
from .records import MedicalRecord, corpus_stats, load_corpus, parse_record, partition_views, render_record
