"""
Actor factory: bundle selection, knowledge retrieval, persona and prompt composition.
"""
from .factory import (
    ActorFactory,
    compose_prompt,
    generate_persona,
    instantiate,
    rank_bundles,
    scrub_tool_names,
    select_bundles,
)
from .knowledge import load_knowledge_base, retrieve_knowledge, split_front_matter
from .schemas import ActorBlueprint, KnowledgeBase, KnowledgeEntry

__all__ = [
    "ActorBlueprint",
    "ActorFactory",
    "KnowledgeBase",
    "KnowledgeEntry",
    "compose_prompt",
    "generate_persona",
    "instantiate",
    "load_knowledge_base",
    "rank_bundles",
    "retrieve_knowledge",
    "scrub_tool_names",
    "select_bundles",
    "split_front_matter",
]
