"""Topic naming via three-level prompts, plus the document classifier.

The prompt has three parts: a system text setting the assistant persona,
a one-shot worked example fixing the output format, and a query template
with [DOCUMENTS] and [KEYWORDS] placeholders filled per topic. Backends
define their own chat framing; this engine owns the content and sends
the concatenation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .backends import BackendClient, GenerationParams
from .corpus import Corpus, Document
from .errors import LabelError
from .topics import PROMPT_DOC_CHARS, TopicRepresentation

MAX_LABEL_CHARS = 120
OUTLIER_LABEL = "Outliers"
OUTLIER_TOPIC_ID = -1

DEFAULT_SYSTEM = "You are a helpful, respectful, and honest research assistant for labeling topics."

DEFAULT_ONE_SHOT = """I have a topic that contains the following documents:
- Bisociative Knowledge Discovery by Literature Outlier Detection.
- Evaluating Outliers for Cross-Context Link Discovery.
- Exploring the Power of Outliers for Cross-Domain Literature Mining.
The topic is described by the following keywords: bisociative, knowledge discovery, outlier detection, data mining, cross-context, link discovery, cross-domain, machine learning.
Based on the information about the topic above, please create a simple, short, and concise computer science label for this topic. Make sure you only return the label and nothing more.
[INST]: Outlier-based knowledge discovery"""

DEFAULT_QUERY_TEMPLATE = """I have a topic that contains the following documents:
[DOCUMENTS]
The topic is described by the following keywords: [KEYWORDS]
Based on the information about the topic above, please create a simple, short and concise computer science label for this topic. Make sure you only return the label and nothing more."""


@dataclass
class PromptBundle:
    system: str = DEFAULT_SYSTEM
    one_shot: str = DEFAULT_ONE_SHOT
    query_template: str = DEFAULT_QUERY_TEMPLATE

    def __post_init__(self):
        for placeholder in ("[DOCUMENTS]", "[KEYWORDS]"):
            if self.query_template.count(placeholder) != 1:
                raise ValueError(f"query_template must contain {placeholder} exactly once")

    @classmethod
    def load(cls, path: str | Path) -> "PromptBundle":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            system=payload["system"],
            one_shot=payload["one_shot"],
            query_template=payload["query_template"],
        )

    def save(self, path: str | Path) -> None:
        payload = {"system": self.system, "one_shot": self.one_shot, "query_template": self.query_template}
        Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


@dataclass
class TopicLabel:
    topic_id: int
    label: str
    raw_response: str = ""


def render_topic_prompt(bundle: PromptBundle, rep: TopicRepresentation, corpus: Corpus) -> str:
    """Fill the query template and prepend system and one-shot sections."""
    if not rep.keywords:
        raise ValueError("topic representation has no keywords")
    if not rep.central_doc_ids:
        raise ValueError("topic representation has no central documents")
    doc_lines = "\n".join(
        "- " + corpus.by_id(doc_id).text[:PROMPT_DOC_CHARS] for doc_id in rep.central_doc_ids
    )
    keywords = ", ".join(rep.keyword_terms())
    query = bundle.query_template.replace("[DOCUMENTS]", doc_lines).replace("[KEYWORDS]", keywords)
    return f"{bundle.system}\n\n{bundle.one_shot}\n\n{query}"


def sanitize_label(raw: str) -> str:
    """First non-empty line, stripped of quoting, prefixes, trailing punctuation."""
    line = next((l.strip() for l in raw.splitlines() if l.strip()), "")
    if line.lower().startswith("label:"):
        line = line[len("label:") :].strip()
    while len(line) >= 2 and line[0] == line[-1] and line[0] in "\"'`":
        line = line[1:-1].strip()
    line = line.rstrip(".,;:!").strip()
    while len(line) >= 2 and line[0] == line[-1] and line[0] in "\"'`":
        line = line[1:-1].strip()
    if len(line) > MAX_LABEL_CHARS:
        line = line[:MAX_LABEL_CHARS].rstrip()
    if not line:
        raise LabelError("label is empty after sanitization")
    return line


def label_topic(
    rep: TopicRepresentation,
    corpus: Corpus,
    client: BackendClient,
    bundle: PromptBundle | None = None,
    params: GenerationParams | None = None,
) -> TopicLabel:
    """Name one topic. The outlier cluster gets a fixed label, no model call."""
    if rep.topic_id == OUTLIER_TOPIC_ID:
        return TopicLabel(topic_id=OUTLIER_TOPIC_ID, label=OUTLIER_LABEL)
    bundle = bundle or PromptBundle()
    prompt = render_topic_prompt(bundle, rep, corpus)
    raw = client.generate_text(prompt, params or GenerationParams())
    try:
        label = sanitize_label(raw)
    except LabelError as exc:
        raise LabelError(f"topic {rep.topic_id}: {exc}") from exc
    return TopicLabel(topic_id=rep.topic_id, label=label, raw_response=raw)


CLASS_METHODOLOGY = "methodology"
CLASS_APPLICATION = "application"

CLASSIFIER_SYSTEM = (
    "You are a helpful, respectful, and honest assistant for labeling research "
    "articles into 'methodology' and 'application'."
)

DEFAULT_CLASSIFIER_EXAMPLES = (
    ("Bisociative Knowledge Discovery by Literature Outlier Detection.", CLASS_METHODOLOGY),
    ("ARN: analysis and prediction by adipogenic professional database.", CLASS_APPLICATION),
)

CLASSIFIER_QUERY_TEMPLATE = """I have the following document:
[TITLE]
Based on the title, please classify the document into 'methodology' and 'application'.
Make sure to only return one label and nothing more."""


@dataclass
class ClassifierPrompt:
    system: str = CLASSIFIER_SYSTEM
    examples: tuple[tuple[str, str], ...] = DEFAULT_CLASSIFIER_EXAMPLES
    query_template: str = CLASSIFIER_QUERY_TEMPLATE

    def render(self, doc: Document) -> str:
        shots = "\n".join(f"Document: {title}\nLabel: '{label}'" for title, label in self.examples)
        query = self.query_template.replace("[TITLE]", doc.title)
        return f"{self.system}\n\n{shots}\n\n{query}"


def classify_document(
    doc: Document,
    client: BackendClient,
    prompt: ClassifierPrompt | None = None,
    params: GenerationParams | None = None,
    retries: int = 1,
) -> str:
    """Classify a publication as 'methodology' or 'application'.

    An unparseable response is retried once; a second failure is an error.
    """
    prompt = prompt or ClassifierPrompt()
    params = params or GenerationParams(max_new_tokens=16)
    rendered = prompt.render(doc)
    last_raw = ""
    for _attempt in range(retries + 1):
        last_raw = client.generate_text(rendered, params)
        try:
            cleaned = sanitize_label(last_raw).lower()
        except LabelError:
            continue
        if cleaned in (CLASS_METHODOLOGY, CLASS_APPLICATION):
            return cleaned
    raise LabelError(f"document {doc.id!r}: unparseable class response {last_raw!r}")


def label_all_topics(
    reps: Sequence[TopicRepresentation],
    corpus: Corpus,
    client: BackendClient,
    bundle: PromptBundle | None = None,
    params: GenerationParams | None = None,
    include_outliers: bool = True,
) -> list[TopicLabel]:
    labels = [label_topic(rep, corpus, client, bundle, params) for rep in reps]
    if include_outliers:
        labels.append(TopicLabel(topic_id=OUTLIER_TOPIC_ID, label=OUTLIER_LABEL))
    return labels


def save_labels(labels: Sequence[TopicLabel], path: str | Path) -> None:
    payload = [{"topic_id": l.topic_id, "label": l.label} for l in labels]
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_labels(path: str | Path) -> dict[int, str]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return {int(item["topic_id"]): item["label"] for item in payload}
