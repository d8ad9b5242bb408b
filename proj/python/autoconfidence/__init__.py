"""Preprint publication prediction: cure model, random forest and evaluation."""
import json as _json

from . import _core
from ._core import (
    SCORE_KEYS,
    CureModel,
    Forest,
    NumericalError,
    ParseError,
    ResponseError,
    TransportError,
    ValidationError,
    auroc,
    c_index,
    featurize,
    fit_cure,
    fit_forest,
    format_metric,
    ingest,
    mock_scores,
    parse_eval_response,
    roc_curve,
    score,
    welch_t_test,
)

__all__ = [
    "SCORE_KEYS", "CureModel", "Forest", "NumericalError", "ParseError", "ResponseError", "TransportError", "ValidationError",
    "auroc", "c_index", "evaluate", "featurize", "fit_cure", "fit_forest", "format_metric", "ingest",
    "mock_scores", "parse_eval_response", "render_report", "roc_curve", "score", "welch_t_test",
]


def _config_text(config):
    if config is None:
        return ""
    return config if isinstance(config, str) else _json.dumps(config)


def evaluate(features, out, models=("cure", "forest"), sets=("scores", "scores_emb", "scores_emb_usage"),
             config=None):
    """Cross-validated evaluation; writes report files to `out` and returns the report as a dict."""
    text = _core.evaluate(str(features), list(models), list(sets), str(out), _config_text(config))
    return _json.loads(text)


def render_report(report):
    """Text tables for a report dict (as returned by evaluate) or a path to report.json."""
    if not isinstance(report, dict):
        with open(report) as fh:
            report = _json.load(fh)
    return _core.render_report(_json.dumps(report))
