from .corpus import CorpusIndex, EmptyCorpusError
from .cvss import (
    CvssError,
    CvssInput,
    CvssVector,
    Scope,
    cvss_base_score,
    cvss_impact,
    cvss_impact_subscore,
    exploitability_subscore,
    parse_vector,
    round_up,
    score_vector,
)
from .llm import (
    ENTITY_CLASSES,
    EntitySet,
    OpError,
    ParseFailure,
    SimVerdict,
    SpanResult,
    TripleSet,
    cls_classify,
    map_triples,
    ner_extract,
    rag_answer,
    sim_match,
    spa_locate,
    sum_summarize,
)
from .rex import IndicatorSet, rex_extract

__all__ = [
    "CorpusIndex", "EmptyCorpusError",
    "CvssError", "CvssInput", "CvssVector", "Scope",
    "cvss_base_score", "cvss_impact", "cvss_impact_subscore",
    "exploitability_subscore", "parse_vector", "round_up", "score_vector",
    "ENTITY_CLASSES", "EntitySet", "OpError", "ParseFailure", "SimVerdict",
    "SpanResult", "TripleSet", "cls_classify", "map_triples", "ner_extract",
    "rag_answer", "sim_match", "spa_locate", "sum_summarize",
    "IndicatorSet", "rex_extract",
]
