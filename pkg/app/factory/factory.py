"""
Actor factory: turns a dispatched subtask into a purpose-built actor.

The factory picks whole tool bundles, retrieves knowledge, settles on a persona
and composes the system prompt from five fixed sections.
"""
from __future__ import annotations

import logging
import re
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from ..actor.protocol import OUTPUT_FORMAT
from ..actor.schemas import ActorInstance
from ..config import PersonaEntry
from ..errors import FactoryError, NoBundleMatched
from ..integrations.base import CompletionBackend, ask
from ..planner.schemas import SubtaskSpec
from ..tools.registry import ToolRegistry, describe_toolkit, update_progress_tool
from ..tools.schemas import Bundle
from ..wire import extract_json_object
from .knowledge import retrieve_knowledge
from .schemas import ActorBlueprint, KnowledgeBase

logger = logging.getLogger(__name__)

SECTION_ORDER = ("Persona", "Tools", "Knowledge", "Environment", "Output Format")

PERSONA_TEMPLATE = "A specialist responsible for: {description}"

PERSONA_SYSTEM = "You write the role statement for a specialist agent. Reply with one or two sentences and nothing else."

RANKING_SYSTEM = (
    "You order tool bundles by how useful they are for a subtask. "
    'Reply with a JSON object {"order": ["<bundle name>", ...]}.'
)


def keyword_pattern(keyword: str) -> "re.Pattern[str]":
    words = [re.escape(word) for word in keyword.split()]
    return re.compile(r"\b" + r"\s+".join(words) + r"\b", re.IGNORECASE)


def mentions(text: str, keywords: Sequence[str]) -> bool:
    return any(keyword_pattern(keyword).search(text) for keyword in keywords if keyword.strip())


HIDDEN_TOOL = "(unavailable tool)"


def scrub_tool_names(text: str, hidden: Sequence[str]) -> str:
    """Replace every whole-word, case-sensitive mention of a ``hidden`` tool."""
    names = sorted({name for name in hidden if name}, key=len, reverse=True)
    if not names:
        return text
    pattern = re.compile(r"(?<![A-Za-z0-9_])(?:" + "|".join(re.escape(name) for name in names) + r")(?![A-Za-z0-9_])")
    return pattern.sub(HIDDEN_TOOL, text)


# ==================== selection ====================


def select_bundles(subtask: SubtaskSpec, registry: ToolRegistry) -> List[Bundle]:
    """Bundles whose trigger keywords occur in the description, in registry order."""
    if not subtask.description.strip():
        return []
    return [bundle for bundle in registry.bundles if mentions(subtask.description, bundle.trigger_keywords)]


def rank_bundles(subtask: SubtaskSpec, bundles: List[Bundle], backend: CompletionBackend) -> List[Bundle]:
    """Let the backend re-order keyword matches. It can never add or drop one."""
    if len(bundles) < 2:
        return bundles
    listing = "\n".join(f"- {bundle.name}: {bundle.description}" for bundle in bundles)
    reply = ask(backend, "factory", RANKING_SYSTEM, f"Subtask: {subtask.description}\nBundles:\n{listing}")
    try:
        order = extract_json_object(reply).get("order", [])
    except ValueError:
        logger.warning("bundle ranking reply was not JSON; keeping keyword order")
        return bundles
    by_name = {bundle.name: bundle for bundle in bundles}
    ranked = [by_name.pop(name) for name in order if isinstance(name, str) and name in by_name]
    return ranked + [bundle for bundle in bundles if bundle.name in by_name]


# ==================== persona ====================


def generate_persona(
    subtask: SubtaskSpec,
    backend: Optional[CompletionBackend],
    mode: str = "generate",
    pool: Sequence[PersonaEntry] = (),
) -> str:
    fallback = PERSONA_TEMPLATE.format(description=subtask.description)
    if mode == "pool":
        for entry in pool:
            if mentions(subtask.description, entry.keywords):
                return entry.persona
        return fallback
    if mode != "generate" or backend is None:
        return fallback

    user = f"Subtask: {subtask.description}"
    if subtask.completion_criteria:
        user += f"\nCompletion criteria: {subtask.completion_criteria}"
    reply = ask(backend, "factory", PERSONA_SYSTEM, user)
    lines = [line.strip().strip('"') for line in reply.strip().splitlines() if line.strip()]
    if not lines:
        logger.warning(f"empty persona for {subtask.task_id}; using the template")
        return fallback
    return " ".join(lines)


# ==================== prompt ====================


def compose_prompt(
    persona: str,
    tool_descriptions: str,
    knowledge: Sequence[str],
    env: Mapping[str, str],
    output_format: str,
    hidden_tools: Sequence[str] = (),
) -> str:
    """Five fixed sections; names in ``hidden_tools`` are scrubbed from all of them."""
    if not persona.strip():
        raise FactoryError("persona must not be empty")
    knowledge_text = "\n".join(f"- {snippet}" for snippet in knowledge) or "(none)"
    env_text = "\n".join(f"{key}: {env[key]}" for key in sorted(env)) or "(none)"
    bodies = (persona.strip(), tool_descriptions.strip() or "(none)", knowledge_text, env_text, output_format.strip())
    return (
        "\n\n".join(
            f"## {title}\n{scrub_tool_names(body, hidden_tools)}" for title, body in zip(SECTION_ORDER, bodies)
        )
        + "\n"
    )


# ==================== assembly ====================


class ActorFactory:
    def __init__(
        self,
        registry: ToolRegistry,
        kb: Optional[KnowledgeBase] = None,
        env: Optional[Mapping[str, str]] = None,
        backend: Optional[CompletionBackend] = None,
        persona_mode: str = "generate",
        persona_pool: Sequence[PersonaEntry] = (),
        bundle_selection: str = "keyword",
        fallback_bundle: Optional[str] = "Core",
        knowledge_limit: int = 3,
        step_limit: int = 20,
    ) -> None:
        if len(registry) == 0:
            raise FactoryError("tool registry is empty")
        if fallback_bundle is not None and registry.bundle(fallback_bundle) is None:
            raise FactoryError(f"fallback bundle '{fallback_bundle}' is not registered")
        self.registry = registry
        self.kb = kb or KnowledgeBase()
        self.env: Dict[str, str] = dict(env or {})
        self.backend = backend
        self.persona_mode = persona_mode
        self.persona_pool = list(persona_pool)
        self.bundle_selection = bundle_selection
        self.fallback_bundle = fallback_bundle
        self.knowledge_limit = knowledge_limit
        self.step_limit = step_limit

    def blueprint(self, subtask: SubtaskSpec) -> Tuple[ActorBlueprint, List[Bundle]]:
        bundles = select_bundles(subtask, self.registry)
        if self.bundle_selection == "assisted" and self.backend is not None:
            bundles = rank_bundles(subtask, bundles, self.backend)
        if not bundles:
            if self.fallback_bundle is None:
                raise NoBundleMatched(f"no bundle matches subtask {subtask.task_id}: {subtask.description!r}")
            bundles = [self.registry.bundle(self.fallback_bundle)]

        toolkit = self.registry.toolkit_for(bundles) + [update_progress_tool()]
        selected = {tool.name for tool in toolkit}
        hidden = [name for name in self.registry.tool_names if name not in selected]
        persona = scrub_tool_names(
            generate_persona(subtask, self.backend, self.persona_mode, self.persona_pool), hidden
        )
        knowledge = [
            scrub_tool_names(snippet, hidden)
            for snippet in retrieve_knowledge(subtask, self.kb, self.knowledge_limit)
        ]
        prompt = compose_prompt(persona, describe_toolkit(toolkit), knowledge, self.env, OUTPUT_FORMAT, hidden)
        blueprint = ActorBlueprint(
            persona=persona,
            bundle_names=[bundle.name for bundle in bundles],
            knowledge=knowledge,
            environment=dict(self.env),
            output_format=OUTPUT_FORMAT,
            composed_prompt=prompt,
        )
        return blueprint, bundles

    def build(self, subtask: SubtaskSpec, actor_id: str) -> Tuple[ActorBlueprint, ActorInstance]:
        blueprint, bundles = self.blueprint(subtask)
        actor = ActorInstance(
            actor_id=actor_id,
            prompt=blueprint.composed_prompt,
            toolkit=self.registry.toolkit_for(bundles) + [update_progress_tool()],
            subtask=subtask,
            step_limit=self.step_limit,
        )
        logger.info(f"Instantiated {actor_id} for {subtask.task_id} with bundles {blueprint.bundle_names}")
        return blueprint, actor


def instantiate(
    subtask: SubtaskSpec,
    registry: ToolRegistry,
    kb: Optional[KnowledgeBase] = None,
    env: Optional[Mapping[str, str]] = None,
    backend: Optional[CompletionBackend] = None,
    actor_id: str = "actor-1",
    **options,
) -> ActorInstance:
    _, actor = ActorFactory(registry, kb, env, backend, **options).build(subtask, actor_id)
    return actor
