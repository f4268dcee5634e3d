"""Prompt registry and model client tests."""

from __future__ import annotations

import pytest

from persum import modelio, prompts
from persum.errors import ConfigError, ProtocolError, RenderError, TransportError

from conftest import stub_client


# -- prompt registry ------------------------------------------------------------


def test_registry_ships_core_templates():
    for template_id in (
        "llm_coverage", "llm_faithfulness", "zero_shot_left",
        "paraphrase_key_point", "reverse_key_point",
    ):
        assert prompts.get_template(template_id).body


def test_render_zero_shot():
    rendered = prompts.render(
        "zero_shot_left", {"left_article": "L-TEXT", "right_article": "R-TEXT"}
    )
    assert "summarize only the Left-leaning perspective" in rendered
    assert "Left:\nL-TEXT" in rendered
    assert "Right:\nR-TEXT" in rendered
    assert "(left-perspective article)" not in rendered


def test_render_judge_prompt_has_scale_and_texts():
    rendered = prompts.render("llm_coverage", {"article": "AAA", "summary": "SSS"})
    assert "1. No Coverage" in rendered
    assert rendered.endswith("# Final Coverage Score (1~5 only):")
    assert "AAA" in rendered and "SSS" in rendered


def test_render_missing_placeholder_named():
    with pytest.raises(RenderError, match="summary"):
        prompts.render("llm_coverage", {"article": "AAA"})


def test_render_no_placeholder_template_unchanged():
    template = prompts.PromptTemplate("static_test", "static body, no markers", {})
    prompts.REGISTRY[template.template_id] = template
    try:
        assert prompts.render("static_test", {}) == "static body, no markers"
    finally:
        del prompts.REGISTRY["static_test"]


def test_render_value_containing_marker_is_literal():
    rendered = prompts.render(
        "llm_coverage", {"article": "has (summary) inside", "summary": "S"}
    )
    assert "has (summary) inside" in rendered


def test_render_unknown_template():
    with pytest.raises(RenderError):
        prompts.render("nope", {})


def test_render_injective_for_distinct_articles():
    seen = set()
    for i in range(20):
        seen.add(prompts.render("llm_coverage", {"article": f"a{i}", "summary": "s"}))
    assert len(seen) == 20


def test_repeated_marker_substituted_everywhere():
    rendered = prompts.render(
        "refine_revise",
        {
            "left_article": "L", "right_article": "R", "perspective": "Right",
            "summary": "S", "critique": "C",
        },
    )
    assert "(perspective)" not in rendered
    assert "'The Right '" in rendered


def test_prompt_digests_stable():
    digests = prompts.prompt_digests(["llm_coverage"])
    assert digests == prompts.prompt_digests(["llm_coverage"])
    assert len(digests["llm_coverage"]) == 12


# -- cache ------------------------------------------------------------------------


def test_cache_hit_skips_transport(tmp_path):
    calls = []

    def transport(endpoint, prompt, sample_index):
        calls.append(prompt)
        return f"completion for {prompt}"

    client = stub_client(transport, cache_dir=tmp_path / "cache")
    first = client.complete("stub", "hello", 0)
    assert client.complete("stub", "hello", 0) == first
    assert len(calls) == 1
    assert client.calls == 1


def test_cache_distinct_sample_indices(tmp_path):
    client = stub_client(lambda e, p, i: f"sample {i}", cache_dir=tmp_path / "c")
    assert client.complete("stub", "p", 0) == "sample 0"
    assert client.complete("stub", "p", 1) == "sample 1"
    key0 = modelio.cache_key(client.endpoint("stub"), "p", 0)
    key1 = modelio.cache_key(client.endpoint("stub"), "p", 1)
    assert key0 != key1


def test_cache_warm_rerun_identical_without_network(tmp_path):
    cache = tmp_path / "cache"
    client = stub_client(lambda e, p, i: "value", cache_dir=cache)
    client.complete("stub", "p", 0)

    def explode(endpoint, prompt, sample_index):
        raise AssertionError("network used despite warm cache")

    cold = stub_client(explode, cache_dir=cache)
    assert cold.complete("stub", "p", 0) == "value"


# -- retries ------------------------------------------------------------------------


def test_retries_then_success():
    state = {"n": 0}

    def flaky(endpoint, prompt, sample_index):
        state["n"] += 1
        if state["n"] < 3:
            raise OSError("connection reset")
        return "ok"

    client = stub_client(flaky)
    assert client.complete("stub", "p") == "ok"
    assert state["n"] == 3


def test_exhausted_retries_carry_attempt_log():
    def failing(endpoint, prompt, sample_index):
        raise OSError("down")

    client = stub_client(failing)
    with pytest.raises(TransportError) as err:
        client.complete("stub", "p")
    assert len(err.value.attempts) == 3


def test_non_string_completion_is_protocol_error():
    client = stub_client(lambda e, p, i: 42)
    with pytest.raises(ProtocolError):
        client.complete("stub", "p")


# -- mock transport --------------------------------------------------------------


def test_mock_echo():
    client = modelio.mock_client(behavior="echo")
    assert client.complete("generator", "echo me") == "echo me"


def test_mock_distinct_samples_at_positive_temperature():
    client = modelio.mock_client(seed=1)
    a = client.complete("generator", "some prompt", 0)
    b = client.complete("generator", "some prompt", 1)
    assert a != b  # generator temperature defaults to 0.7


def test_mock_greedy_at_zero_temperature():
    client = modelio.mock_client(seed=1)
    a = client.complete("judge_coverage", "rate this. Score (1~5 only):", 0)
    b = client.complete("judge_coverage", "rate this. Score (1~5 only):", 5)
    assert a == b
    assert a in {"1", "2", "3", "4", "5"}


def test_mock_seed_determinism():
    first = modelio.mock_client(seed=3).complete("generator", "p", 2)
    second = modelio.mock_client(seed=3).complete("generator", "p", 2)
    assert first == second
    other = modelio.mock_client(seed=4).complete("generator", "p", 2)
    assert first != other


def test_mock_respects_summary_prefix_contract():
    client = modelio.mock_client(seed=0)
    prompt = "Summarize, starting with 'The Left '. ONLY RETURN THE SUMMARY."
    assert client.complete("generator", prompt).startswith("The Left ")


# -- external scorers --------------------------------------------------------------


def test_external_score_passthrough():
    client = stub_client(None, scorer_transport=lambda s, c, k: 0.5)
    assert client.external_score("scorer", "ctx", "claim") == 0.5


def test_external_score_out_of_range_rejected():
    client = stub_client(None, scorer_transport=lambda s, c, k: 1.2)
    with pytest.raises(ProtocolError):
        client.external_score("scorer", "ctx", "claim")


def test_external_score_exact_match_stub():
    def exact_match(scorer, context, claim):
        return 1.0 if context == claim else 0.0

    client = stub_client(None, scorer_transport=exact_match)
    assert client.external_score("scorer", "same", "same") == 1.0
    assert client.external_score("scorer", "same", "different") == 0.0


def test_external_score_non_numeric_rejected():
    client = stub_client(None, scorer_transport=lambda s, c, k: "high")
    with pytest.raises(ProtocolError):
        client.external_score("scorer", "ctx", "claim")


# -- config ---------------------------------------------------------------------------


def test_load_client_from_config(tmp_path):
    config = tmp_path / "endpoints.json"
    config.write_text(
        """
        {
          "default_params": {"temperature": 0.2, "max_tokens": 64},
          "endpoints": [
            {"name": "gen", "base_url": "mock://auto", "model_id": "m", "mock_seed": 7},
            {"name": "judge", "base_url": "mock://auto", "model_id": "j",
             "params": {"temperature": 0.0}}
          ],
          "scorers": [{"name": "align", "base_url": "http://localhost:9/score"}],
          "retries": 2, "backoff_base": 0.0
        }
        """
    )
    client = modelio.load_client(config)
    assert client.endpoint("gen").params["temperature"] == 0.2
    assert client.endpoint("judge").params["temperature"] == 0.0
    assert client.retries == 2
    assert "align" in client.scorers


def test_duplicate_endpoint_names_rejected():
    endpoint = modelio.ModelEndpoint("x", "mock://auto", "m")
    with pytest.raises(ConfigError):
        modelio.ModelClient(endpoints=[endpoint, endpoint])


def test_negative_temperature_rejected():
    with pytest.raises(ConfigError):
        modelio.ModelEndpoint("x", "mock://auto", "m", params={"temperature": -1})


def test_unknown_endpoint_rejected():
    with pytest.raises(ConfigError):
        modelio.mock_client().complete("missing", "p")
