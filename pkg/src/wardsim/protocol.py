"""Roles, addressee-token routing, utterances and transcripts."""

from __future__ import annotations

import enum
import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import (
    AddresseeUnresolved,
    ContentContainsReservedToken,
    RoutingConfigError,
    TranscriptError,
)


class Role(str, enum.Enum):
    PATIENT = "Patient"
    DOCTOR = "Doctor"
    EXAMINER = "Examiner"
    CHIEF = "ChiefPhysician"


class FallbackPolicy(str, enum.Enum):
    ERROR = "Error"
    LAST_INTERLOCUTOR = "LastInterlocutor"


def _default_fallback() -> dict[Role, FallbackPolicy]:
    policies = {role: FallbackPolicy.ERROR for role in Role}
    policies[Role.PATIENT] = FallbackPolicy.LAST_INTERLOCUTOR
    return policies


@dataclass(frozen=True)
class RoutingConfig:
    addressee_tokens: Mapping[Role, str]
    end_token: str = "<end>"
    fallback_policy: Mapping[Role, FallbackPolicy] = field(default_factory=_default_fallback)

    def __post_init__(self) -> None:
        tokens = list(self.addressee_tokens.values())
        if set(self.addressee_tokens) != set(Role):
            raise RoutingConfigError("every role needs an addressee token")
        if any(not t or not t.strip() for t in tokens) or not self.end_token.strip():
            raise RoutingConfigError("tokens must be non-empty")
        folded = [t.casefold() for t in tokens] + [self.end_token.casefold()]
        if len(set(folded)) != len(folded):
            raise RoutingConfigError("tokens must be pairwise distinct")
        for a in folded:
            for b in folded:
                if a is not b and b.startswith(a):
                    raise RoutingConfigError(f"token {a!r} is a prefix of {b!r}")

    def token_for(self, role: Role) -> str:
        return self.addressee_tokens[role]

    def policy_for(self, speaker: Role) -> FallbackPolicy:
        return self.fallback_policy.get(speaker, FallbackPolicy.ERROR)

    def reserved_tokens(self) -> list[str]:
        return list(self.addressee_tokens.values()) + [self.end_token]


DEFAULT_ROUTING = RoutingConfig(
    {
        Role.DOCTOR: "<To the doctor>",
        Role.EXAMINER: "<To the examiner>",
        Role.PATIENT: "<To the patient>",
        Role.CHIEF: "<To the chief physician>",
    }
)

SPEAK_TO_ROUTING = RoutingConfig(
    {
        Role.DOCTOR: "<Speak to Doctor>",
        Role.EXAMINER: "<Speak to Examiner>",
        Role.PATIENT: "<Speak to Patient>",
        Role.CHIEF: "<Speak to Chief Physician>",
    },
    end_token="<END>",
)

ZH_ROUTING = RoutingConfig(
    {
        Role.DOCTOR: "<对医生讲>",
        Role.EXAMINER: "<对检查员讲>",
        Role.PATIENT: "<对病人讲>",
        Role.CHIEF: "<对主任医生讲>",
    },
    end_token="<结束>",
)

ROUTINGS = {"default": DEFAULT_ROUTING, "speak-to": SPEAK_TO_ROUTING, "zh": ZH_ROUTING}


@dataclass(frozen=True)
class Utterance:
    speaker: Role
    addressee: Role
    content: str
    terminal: bool = False

    def __post_init__(self) -> None:
        if self.speaker == self.addressee:
            raise ValueError("speaker and addressee must differ")
        if self.terminal and self.speaker != Role.PATIENT:
            raise ValueError("only the patient may end a dialogue")


def _casefold_find(haystack: str, needle: str) -> int:
    return haystack.casefold().find(needle.casefold())


def _strip_all(text: str, token: str) -> str:
    return re.sub(r"\s*" + re.escape(token) + r"\s*", " ", text, flags=re.IGNORECASE)


def parse_utterance(
    raw: str,
    speaker: Role,
    routing: RoutingConfig = DEFAULT_ROUTING,
    last_interlocutor: Role | None = None,
) -> Utterance:
    """Resolve the addressee from the leading token and strip routing syntax.

    Without a usable leading token the speaker's fallback policy applies. A
    patient with no conversation partner yet defaults to the doctor.
    """
    if not raw or not raw.strip():
        raise ValueError("empty utterance")
    # only the patient can end a dialogue; elsewhere the token is plain text
    terminal = speaker == Role.PATIENT and _casefold_find(raw, routing.end_token) >= 0
    body = _strip_all(raw, routing.end_token) if terminal else raw
    body = body.strip()

    leading: list[Role] = []
    rest = body
    while True:
        for role, token in routing.addressee_tokens.items():
            if rest.casefold().startswith(token.casefold()):
                leading.append(role)
                rest = rest[len(token):].lstrip()
                break
        else:
            break

    if len(leading) == 1 and leading[0] != speaker:
        addressee = leading[0]
    else:
        if routing.policy_for(speaker) == FallbackPolicy.ERROR:
            why = "no leading addressee token" if not leading else "ambiguous addressee tokens"
            raise AddresseeUnresolved(f"{speaker.value}: {why} in {raw!r}")
        addressee = last_interlocutor or (Role.DOCTOR if speaker == Role.PATIENT else None)
        if addressee is None or addressee == speaker:
            raise AddresseeUnresolved(f"{speaker.value}: no interlocutor to fall back to")
        if len(leading) > 1 or (leading and leading[0] == speaker):
            rest = body
    return Utterance(speaker, addressee, rest.strip(), terminal)


def render_utterance(u: Utterance, routing: RoutingConfig = DEFAULT_ROUTING) -> str:
    for token in routing.reserved_tokens():
        if _casefold_find(u.content, token) >= 0:
            raise ContentContainsReservedToken(f"content contains reserved token {token!r}")
    text = f"{routing.token_for(u.addressee)} {u.content}"
    if u.terminal:
        text = f"{text} {routing.end_token}"
    return text


@dataclass(frozen=True)
class TranscriptEntry:
    seq: int
    utterance: Utterance
    round: int


@dataclass
class Transcript:
    session_id: str
    entries: list[TranscriptEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def utterances(self) -> list[Utterance]:
        return [e.utterance for e in self.entries]

    @property
    def closed(self) -> bool:
        return bool(self.entries) and self.entries[-1].utterance.terminal

    def append(self, u: Utterance, round: int) -> TranscriptEntry:
        if self.closed:
            raise TranscriptError("cannot append after a terminal utterance")
        if self.entries and round < self.entries[-1].round:
            raise TranscriptError("round counter must not decrease")
        entry = TranscriptEntry(len(self.entries), u, round)
        self.entries.append(entry)
        return entry

    def snapshot(self) -> Transcript:
        return Transcript(self.session_id, list(self.entries))

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {
                    "seq": e.seq,
                    "speaker": e.utterance.speaker.value,
                    "addressee": e.utterance.addressee.value,
                    "content": e.utterance.content,
                    "terminal": e.utterance.terminal,
                    "round": e.round,
                },
                ensure_ascii=False,
            )
            for e in self.entries
        ]
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_jsonl(cls, session_id: str, text: str) -> Transcript:
        t = cls(session_id)
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            u = Utterance(Role(obj["speaker"]), Role(obj["addressee"]), obj["content"], obj["terminal"])
            t.append(u, obj["round"])
        return t

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode("utf-8")).hexdigest()


def visible_to(u: Utterance, viewer: Role) -> bool:
    if viewer == Role.CHIEF:
        return True
    return u.speaker == viewer or u.addressee == viewer


def history_for(t: Transcript | Iterable[Utterance], viewer: Role) -> list[Utterance]:
    utterances = t.utterances if isinstance(t, Transcript) else list(t)
    return [u for u in utterances if visible_to(u, viewer)]
