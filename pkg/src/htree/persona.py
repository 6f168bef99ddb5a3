"""Cluster profiling and persona description generation.

A cluster profile aggregates member z-scores and success rates. The
profile is rendered into a feature block, embedded into a versioned prompt
template, and sent to a chat-completion endpoint; an offline deterministic
mock stands in for the network by default. Responses are parsed back into
a structured five-section description.
"""

from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass
from importlib import resources

import numpy as np
import requests

from .dtree import Rule
from .errors import (
    ConfigError,
    DataError,
    LlmProtocolError,
    LlmTimeoutError,
    LlmTransportError,
    PersonaValidationError,
)
from .tabular import StandardizationStats, transform_rows

TEMPLATE_RESOURCE = "templates/persona_prompt_v1.txt"

PROVENANCE_MOCK = "mock"
PROVENANCE_LIVE = "live"

IMPORTANCE_FLOOR = 0.05

SECTION_FIELDS = (
    ("Persona Summary", "persona_summary"),
    ("Key Distinguishing Traits", "distinguishing_traits"),
    ("Success Factors", "success_factors"),
    ("Risk Factors", "risk_factors"),
    ("Recommendations", "recommendations"),
)

NO_FEATURES_PLACEHOLDER = "no distinguishing features"


def normalize_success_rate(raw_rate: float, p_train: float, p_real: float) -> float:
    """Rescale a rate observed at training prevalence p_train to real prevalence p_real.

    normalized = raw * (p_real / p_train), clamped to [0, 1].
    """
    if not 0.0 <= raw_rate <= 1.0:
        raise DataError(f"raw rate {raw_rate} outside [0, 1]")
    if not 0.0 < p_train <= 1.0:
        raise DataError(f"training prevalence {p_train} outside (0, 1]")
    if not 0.0 < p_real <= 1.0:
        raise DataError(f"real-world prevalence {p_real} outside (0, 1]")
    return min(1.0, max(0.0, raw_rate * (p_real / p_train)))


@dataclass(frozen=True)
class SubclusterStats:
    """One leaf of a cluster's local tree, with its raw-unit rule and rates."""

    rule: Rule
    member_count: int
    success_count: int
    raw_success_rate: float
    normalized_success_rate: float

    def to_dict(self) -> dict:
        return {
            "rule": self.rule.to_dict(),
            "member_count": self.member_count,
            "success_count": self.success_count,
            "raw_success_rate": self.raw_success_rate,
            "normalized_success_rate": self.normalized_success_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubclusterStats":
        return cls(
            rule=Rule.from_dict(d["rule"]),
            member_count=int(d["member_count"]),
            success_count=int(d["success_count"]),
            raw_success_rate=float(d["raw_success_rate"]),
            normalized_success_rate=float(d["normalized_success_rate"]),
        )


@dataclass(frozen=True)
class ClusterProfile:
    """Statistical portrait of one cluster in globally standardized units."""

    cluster_label: int
    member_count: int
    success_count: int
    raw_success_rate: float
    normalized_success_rate: float
    feature_names: tuple[str, ...]
    feature_zscores: tuple[float, ...]
    significant_features: tuple[tuple[str, float], ...]
    subclusters: tuple[SubclusterStats, ...] = ()

    def to_dict(self) -> dict:
        return {
            "cluster_label": self.cluster_label,
            "member_count": self.member_count,
            "success_count": self.success_count,
            "raw_success_rate": self.raw_success_rate,
            "normalized_success_rate": self.normalized_success_rate,
            "feature_names": list(self.feature_names),
            "feature_zscores": list(self.feature_zscores),
            "significant_features": [[n, z] for n, z in self.significant_features],
            "subclusters": [s.to_dict() for s in self.subclusters],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterProfile":
        return cls(
            cluster_label=int(d["cluster_label"]),
            member_count=int(d["member_count"]),
            success_count=int(d["success_count"]),
            raw_success_rate=float(d["raw_success_rate"]),
            normalized_success_rate=float(d["normalized_success_rate"]),
            feature_names=tuple(d["feature_names"]),
            feature_zscores=tuple(float(z) for z in d["feature_zscores"]),
            significant_features=tuple((str(n), float(z)) for n, z in d["significant_features"]),
            subclusters=tuple(SubclusterStats.from_dict(s) for s in d["subclusters"]),
        )


def profile_cluster(
    cluster_label: int,
    rows: np.ndarray,
    labels: np.ndarray,
    stats: StandardizationStats,
    feature_names,
    p_train: float,
    p_real: float,
    top_k: int = 5,
) -> ClusterProfile:
    """Profile one cluster from its raw member rows and labels.

    Z-scores are per-feature means of the globally standardized member
    rows; significant_features lists the top_k by |z|, descending (ties:
    schema order). Rates: raw from the members, normalized via
    normalize_success_rate.
    """
    X = np.asarray(rows, dtype=float)
    y = np.asarray(labels, dtype=int)
    names = tuple(feature_names)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError(f"cluster {cluster_label} has no member rows")
    if len(names) != X.shape[1]:
        raise DataError("feature_names length does not match row width")
    if y.shape != (X.shape[0],):
        raise DataError("labels length does not match row count")
    if top_k < 1:
        raise ConfigError("top_k must be at least 1")

    z = transform_rows(X, stats).mean(axis=0)
    order = np.argsort(-np.abs(z), kind="stable")
    significant = tuple((names[i], float(z[i])) for i in order[: min(top_k, len(names))])
    members = X.shape[0]
    successes = int(y.sum())
    raw_rate = successes / members
    return ClusterProfile(
        cluster_label=cluster_label,
        member_count=members,
        success_count=successes,
        raw_success_rate=raw_rate,
        normalized_success_rate=normalize_success_rate(raw_rate, p_train, p_real),
        feature_names=names,
        feature_zscores=tuple(float(v) for v in z),
        significant_features=significant,
    )


def _comparison_phrase(z: float) -> str:
    magnitude = abs(z)
    if z == 0.0:
        return "at the population average"
    side = "above" if z > 0 else "below"
    if magnitude >= 1.0:
        return f"far {side} the population average"
    if magnitude >= 0.25:
        return f"{side} the population average"
    return f"slightly {side} the population average"


def format_feature_stats(
    profile: ClusterProfile,
    importances: np.ndarray | None = None,
    significance_threshold: float = 0.05,
) -> str:
    """Render a cluster's notable features as one line per feature.

    Line format: "<name> <arrow> (<|z| to 2 decimals>), <comparison phrase>"
    with the arrow up for z > 0, else down. Selection is the union of the
    profile's top-|z| features and any feature whose tree importance is at
    least 0.05; a feature is dropped when |z| < significance_threshold and
    its importance is below 0.05. An empty selection renders the
    placeholder line "no distinguishing features".
    """
    if significance_threshold < 0:
        raise ConfigError("significance_threshold must be non-negative")
    imp = None
    if importances is not None:
        imp = np.asarray(importances, dtype=float)
        if imp.shape != (len(profile.feature_names),):
            raise DataError("importance vector length does not match feature count")

    index = {n: i for i, n in enumerate(profile.feature_names)}
    chosen: list[str] = [name for name, _ in profile.significant_features]
    if imp is not None:
        boosted = [
            (float(imp[i]), name)
            for name, i in index.items()
            if imp[i] >= IMPORTANCE_FLOOR and name not in chosen
        ]
        for _, name in sorted(boosted, key=lambda t: (-t[0], index[t[1]])):
            chosen.append(name)

    lines = []
    for name in chosen:
        z = profile.feature_zscores[index[name]]
        importance = float(imp[index[name]]) if imp is not None else 0.0
        if abs(z) < significance_threshold and importance < IMPORTANCE_FLOOR:
            continue
        arrow = "↑" if z > 0 else "↓"
        lines.append(f"{name} {arrow} ({abs(z):.2f}), {_comparison_phrase(z)}")
    return "\n".join(lines) if lines else NO_FEATURES_PLACEHOLDER


@dataclass(frozen=True)
class PromptBundle:
    """A ready-to-send prompt: system context, full user prompt, and the raw block."""

    system_context: str
    full_prompt: str
    feature_block: str


def _load_template(template_path: str | None) -> str:
    if template_path is None:
        ref = resources.files(__package__).joinpath(TEMPLATE_RESOURCE)
        try:
            return ref.read_text(encoding="utf-8")
        except (FileNotFoundError, OSError) as exc:
            raise ConfigError(f"prompt template resource missing: {exc}") from exc
    try:
        with open(template_path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read prompt template '{template_path}': {exc}") from exc


def construct_prompt(
    feature_block: str, guidelines: str = "", template_path: str | None = None
) -> PromptBundle:
    """Embed a feature block into the versioned prompt template.

    The template must contain the {feature_data} placeholder exactly once.
    Non-empty guidelines are appended as an extra block. The system context
    is the template's Context section.
    """
    if not feature_block.strip():
        raise DataError("feature block must be non-empty")
    template = _load_template(template_path)
    if template.count("{feature_data}") != 1:
        raise ConfigError("prompt template must contain {feature_data} exactly once")
    match = re.search(r"Context:\s*\n(.*?)\n\s*\nInput Features:", template, re.DOTALL)
    if match is None:
        raise ConfigError("prompt template missing Context / Input Features sections")
    full = template.replace("{feature_data}", feature_block)
    if guidelines.strip():
        full = full.rstrip("\n") + "\n\nAdditional Guidelines:\n" + guidelines.strip() + "\n"
    return PromptBundle(
        system_context=match.group(1).strip(),
        full_prompt=full,
        feature_block=feature_block,
    )


@dataclass(frozen=True)
class LlmParams:
    """Chat-completion request settings; sampling knobs are fixed defaults."""

    endpoint: str = "http://localhost:8080/v1/chat/completions"
    model_name: str = "gpt-4o"
    temperature: float = 0.7
    top_p: float = 0.95
    max_tokens: int = 1000
    frequency_penalty: float = 0.5
    timeout: float = 30.0
    max_retries: int = 2
    api_key_env: str = "HTREE_LLM_API_KEY"

    def __post_init__(self):
        if not self.endpoint:
            raise ConfigError("LLM endpoint must be non-empty")
        if self.timeout <= 0:
            raise ConfigError("LLM timeout must be positive")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be non-negative")
        if self.max_tokens < 1:
            raise ConfigError("max_tokens must be positive")

    def to_dict(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "model_name": self.model_name,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
            "frequency_penalty": self.frequency_penalty,
            "timeout": self.timeout,
            "max_retries": self.max_retries,
            "api_key_env": self.api_key_env,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LlmParams":
        return cls(**d)


_FEATURE_LINE = re.compile(
    r"^(?P<name>\S+) (?P<arrow>↑|↓) \((?P<z>\d+(?:\.\d+)?)\)(?:, (?P<phrase>.*))?$"
)


def mock_completion(feature_block: str) -> str:
    """Deterministic offline persona text derived from the feature block.

    Pure string processing: the same block always yields byte-identical
    output in the five-section format the parser expects.
    """
    parsed: list[tuple[str, bool, float]] = []
    for line in feature_block.splitlines():
        m = _FEATURE_LINE.match(line.strip())
        if m:
            parsed.append((m.group("name"), m.group("arrow") == "↑", float(m.group("z"))))

    if not parsed:
        summary = (
            "No single feature separates this group from the wider population; "
            "members look close to average on every measured dimension. "
            "Treat the group as a baseline segment and weight individual "
            "diligence over group-level signals."
        )
        traits = ["All measured features sit near the population average"]
        ups: list[tuple[str, float]] = []
        downs: list[tuple[str, float]] = []
    else:
        names = [name for name, _, _ in parsed[:3]]
        lead_name, lead_up, lead_z = parsed[0]
        summary = (
            f"Members of this group stand out most on {', '.join(names)}. "
            f"The strongest signal is {lead_name} at {lead_z:.2f} standard deviations "
            f"{'above' if lead_up else 'below'} the population mean. "
            "The persona summarizes shared statistics, not any individual founder."
        )
        traits = [
            f"{name}: {z:.2f} standard deviations {'above' if up else 'below'} the population mean"
            for name, up, z in parsed
        ]
        ups = [(name, z) for name, up, z in parsed if up]
        downs = [(name, z) for name, up, z in parsed if not up]

    if ups:
        success = [
            f"Elevated {name} is a concrete asset; weight it when sourcing similar opportunities"
            for name, _ in ups[:3]
        ]
    else:
        success = [
            "No feature stands clearly above the population mean; execution quality will decide outcomes"
        ]
    if downs:
        risk = [
            f"Depressed {name} can narrow this group's options under pressure"
            for name, _ in downs[:3]
        ]
    else:
        risk = [
            "No feature sits clearly below the population mean; concentration on few signals is the main caveat"
        ]
    recs = [
        "Validate the pattern on the next training run before acting on it",
        "Compare each new candidate against the group's strongest signal rather than the full profile",
    ]
    if parsed:
        recs.insert(
            0,
            f"Screen for {parsed[0][0]} first; it carries the most contrast for this group",
        )

    def bullets(items):
        return "\n".join(f"- {item}" for item in items)

    return (
        "1. Persona Summary\n"
        + summary
        + "\n\n2. Key Distinguishing Traits\n"
        + bullets(traits)
        + "\n\n3. Success Factors\n"
        + bullets(success)
        + "\n\n4. Risk Factors\n"
        + bullets(risk)
        + "\n\n5. Recommendations\n"
        + bullets(recs)
    )


def query_llm(
    prompt: PromptBundle,
    params: LlmParams,
    mock: bool = False,
    sleeper=time.sleep,
) -> str:
    """Return raw completion text for a prompt, via mock or live HTTP.

    The live path POSTs an OpenAI-style chat payload (system + user
    messages, fixed sampling knobs) with a bearer token from the
    environment when present. Timeouts, connection failures, 429 and 5xx
    statuses are retried with exponential backoff for max_retries + 1
    total attempts; other non-2xx statuses fail immediately. Malformed
    success bodies raise LlmProtocolError without retry.
    """
    if mock:
        return mock_completion(prompt.feature_block)

    payload = {
        "model": params.model_name,
        "messages": [
            {"role": "system", "content": prompt.system_context},
            {"role": "user", "content": prompt.full_prompt},
        ],
        "temperature": params.temperature,
        "top_p": params.top_p,
        "max_tokens": params.max_tokens,
        "frequency_penalty": params.frequency_penalty,
    }
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(params.api_key_env)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    attempts = params.max_retries + 1
    failure: tuple[str, object] | None = None
    for attempt in range(attempts):
        if attempt:
            sleeper(0.5 * 2 ** (attempt - 1))
        try:
            response = requests.post(
                params.endpoint, json=payload, headers=headers, timeout=params.timeout
            )
        except requests.Timeout:
            failure = ("timeout", None)
            continue
        except requests.RequestException as exc:
            failure = ("transport", str(exc))
            continue

        if response.status_code == 429 or response.status_code >= 500:
            failure = ("status", response.status_code)
            continue
        if not 200 <= response.status_code < 300:
            raise LlmTransportError(
                f"chat endpoint returned status {response.status_code}",
                status=response.status_code,
            )

        try:
            body = response.json()
        except ValueError as exc:
            raise LlmProtocolError(f"response body is not JSON: {exc}") from exc
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise LlmProtocolError(
                "response missing choices[0].message.content"
            ) from exc
        if not isinstance(content, str):
            raise LlmProtocolError("completion content is not text")
        return content

    kind, detail = failure
    if kind == "timeout":
        raise LlmTimeoutError(f"chat endpoint timed out after {attempts} attempts")
    if kind == "transport":
        raise LlmTransportError(f"chat endpoint unreachable after {attempts} attempts: {detail}")
    raise LlmTransportError(
        f"chat endpoint returned status {detail} after {attempts} attempts",
        status=int(detail),
    )


@dataclass(frozen=True)
class PersonaDescription:
    """Parsed five-section persona with provenance (mock vs live)."""

    persona_summary: str
    distinguishing_traits: tuple[str, ...]
    success_factors: tuple[str, ...]
    risk_factors: tuple[str, ...]
    recommendations: tuple[str, ...]
    provenance: str
    model_name: str = ""

    def to_dict(self) -> dict:
        return {
            "persona_summary": self.persona_summary,
            "distinguishing_traits": list(self.distinguishing_traits),
            "success_factors": list(self.success_factors),
            "risk_factors": list(self.risk_factors),
            "recommendations": list(self.recommendations),
            "provenance": self.provenance,
            "model_name": self.model_name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PersonaDescription":
        return cls(
            persona_summary=d["persona_summary"],
            distinguishing_traits=tuple(d["distinguishing_traits"]),
            success_factors=tuple(d["success_factors"]),
            risk_factors=tuple(d["risk_factors"]),
            recommendations=tuple(d["recommendations"]),
            provenance=d["provenance"],
            model_name=d.get("model_name", ""),
        )


def _header_pattern(phrase: str) -> re.Pattern:
    # emphasis markers may wrap the numbering ("**2. Risk Factors**") or
    # just the phrase ("2. **Risk Factors**"), so allow them in both spots
    return re.compile(
        r"^[ \t]*(?:[#>]+[ \t]*)?[*_]{0,3}(?:\d+[.)][ \t]*)?[*_]{0,3}"
        + re.escape(phrase)
        + r"[*_]{0,3}[ \t]*(?:\([^()\n]*\))?[ \t]*:?[*_]{0,3}",
        re.IGNORECASE | re.MULTILINE,
    )


_HEADER_PATTERNS = tuple((phrase, _header_pattern(phrase)) for phrase, _ in SECTION_FIELDS)

_BULLET = re.compile(r"^[ \t]*(?:[-*•–][ \t]+|\d+[.)][ \t]+)")


def post_process(
    raw: str, provenance: str = PROVENANCE_LIVE, model_name: str = ""
) -> PersonaDescription:
    """Parse raw persona text into its five sections.

    Headers are matched case-insensitively and tolerate numbering,
    markdown markers, parentheticals, and trailing colons. A missing or
    empty section raises PersonaValidationError naming the section.
    """
    if not raw or not raw.strip():
        raise PersonaValidationError("completion text is empty")

    found: list[tuple[int, int, str]] = []
    for phrase, pattern in _HEADER_PATTERNS:
        match = pattern.search(raw)
        if match is None:
            raise PersonaValidationError(f"missing section '{phrase}'", section=phrase)
        found.append((match.start(), match.end(), phrase))
    found.sort()

    sections: dict[str, str] = {}
    for i, (_, end, phrase) in enumerate(found):
        stop = found[i + 1][0] if i + 1 < len(found) else len(raw)
        sections[phrase] = raw[end:stop].strip()

    values: dict[str, object] = {}
    for phrase, fieldname in SECTION_FIELDS:
        text = sections[phrase]
        if fieldname == "persona_summary":
            value: object = " ".join(text.split())
            if not value:
                raise PersonaValidationError(f"section '{phrase}' is empty", section=phrase)
        else:
            items = tuple(
                _BULLET.sub("", line).strip()
                for line in text.splitlines()
                if line.strip()
            )
            if not items or not all(items):
                raise PersonaValidationError(f"section '{phrase}' is empty", section=phrase)
            value = items
        values[fieldname] = value

    return PersonaDescription(provenance=provenance, model_name=model_name, **values)


def render_description(description: PersonaDescription) -> str:
    """Render a description in the canonical numbered five-section format.

    post_process(render_description(d)) reproduces d (given the same
    provenance arguments).
    """
    parts = []
    for i, (phrase, fieldname) in enumerate(SECTION_FIELDS, start=1):
        value = getattr(description, fieldname)
        if fieldname == "persona_summary":
            body = value
        else:
            body = "\n".join(f"- {item}" for item in value)
        parts.append(f"{i}. {phrase}\n{body}")
    return "\n\n".join(parts)
