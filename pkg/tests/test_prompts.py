"""Prompt templates: slot scanning, rendering, strategy assembly."""

import pytest

from diffmigrate.errors import (
    ArtifactForbidden,
    ArtifactRequired,
    MissingSlot,
    TemplateError,
    UnknownSlot,
)
from diffmigrate.prompts import (
    BENCH_SYSTEM_PROMPT,
    CODE_PAIR_TRIAL,
    DIFF_PAIR_TRIAL,
    MIGRATION_SYSTEM_PROMPT,
    LibraryInfo,
    MigrationStrategy,
    PromptTemplate,
    build_bench_prompt,
    build_migration_prompt,
    default_migration_template,
    load_template_file,
)

LIB = LibraryInfo(name="acme", alias="ac", v_from="1.0", v_to="2.0")


def test_render_substitutes_slots_verbatim():
    t = PromptTemplate("t", "Hello {name}!", frozenset({"name"}))
    assert t.render({"name": "{world}"}) == "Hello {world}!"


def test_slot_names_may_contain_spaces():
    t = PromptTemplate("t", "{library code}", frozenset({"library code"}))
    assert t.render({"library code": "X"}) == "X"


def test_doubled_braces_escape():
    t = PromptTemplate("t", "a {{literal}} b", frozenset())
    assert t.render({}) == "a {literal} b"


def test_unclosed_brace_rejected():
    with pytest.raises(TemplateError):
        PromptTemplate("t", "oops {name", frozenset({"name"}))


def test_empty_slot_name_rejected():
    with pytest.raises(TemplateError):
        PromptTemplate("t", "{}", frozenset())


def test_nested_brace_rejected():
    with pytest.raises(TemplateError):
        PromptTemplate("t", "{a{b}}", frozenset({"a", "b"}))


def test_stray_close_brace_rejected():
    with pytest.raises(TemplateError):
        PromptTemplate("t", "oops } here", frozenset())


def test_body_slots_must_be_declared():
    with pytest.raises(TemplateError):
        PromptTemplate("t", "{undeclared}", frozenset())


def test_declared_but_unused_slot_is_fine():
    t = PromptTemplate("t", "static", frozenset({"spare"}))
    assert t.render({"spare": "ignored"}) == "static"


def test_render_missing_binding():
    t = PromptTemplate("t", "{a}", frozenset({"a"}))
    with pytest.raises(MissingSlot):
        t.render({})


def test_render_unknown_binding():
    t = PromptTemplate("t", "{a}", frozenset({"a"}))
    with pytest.raises(UnknownSlot):
        t.render({"a": "x", "b": "y"})


def test_load_template_with_slots_header(tmp_path):
    path = tmp_path / "custom.txt"
    path.write_text("#slots: code, extra\nBody uses {code} only.\n")
    t = load_template_file(path)
    assert t.required_slots == frozenset({"code", "extra"})
    assert "Body uses" in t.body
    assert "#slots" not in t.body


def test_load_template_without_header_infers_slots(tmp_path):
    path = tmp_path / "plain.txt"
    path.write_text("Use {code} here.\n")
    t = load_template_file(path)
    assert t.required_slots == frozenset({"code"})


def test_migration_system_prompt_is_empty():
    assert MIGRATION_SYSTEM_PROMPT == ""


def test_black_box_prompt_names_versions_not_artifacts():
    system, user = build_migration_prompt(
        MigrationStrategy.BLACK_BOX, "import acme\n", LIB
    )
    assert system == ""
    assert "acme (ac)" in user
    assert "version 1.0" in user
    assert "version 2.0" in user
    assert "import acme\n" in user
    assert user.endswith("Refactored code:")


def test_black_box_rejects_artifact():
    with pytest.raises(ArtifactForbidden):
        build_migration_prompt(
            MigrationStrategy.BLACK_BOX, "code", LIB, artifact="lib source"
        )


def test_with_code_embeds_library_source():
    _, user = build_migration_prompt(
        MigrationStrategy.WITH_CODE, "import acme\n", LIB, artifact="def f(): ...\n"
    )
    assert "def f(): ...\n" in user
    assert "import acme\n" in user
    assert user.index("def f(): ...") < user.index("import acme")


def test_with_code_requires_artifact():
    with pytest.raises(ArtifactRequired):
        build_migration_prompt(MigrationStrategy.WITH_CODE, "code", LIB)
    with pytest.raises(ArtifactRequired):
        build_migration_prompt(
            MigrationStrategy.WITH_CODE, "code", LIB, artifact=""
        )


def test_with_diff_embeds_diff_text():
    diff_text = "--- a/x\n+++ b/x\n@@ -1 +1 @@\n-a\n+b\n"
    _, user = build_migration_prompt(
        MigrationStrategy.WITH_DIFF, "import acme\n", LIB, artifact=diff_text
    )
    assert diff_text in user
    assert user.index(diff_text) < user.index("import acme")


def test_strategy_tags_and_artifact_needs():
    assert MigrationStrategy.from_tag("black_box") is MigrationStrategy.BLACK_BOX
    assert not MigrationStrategy.BLACK_BOX.needs_artifact
    assert MigrationStrategy.WITH_CODE.needs_artifact
    assert MigrationStrategy.WITH_DIFF.needs_artifact
    with pytest.raises(ValueError):
        MigrationStrategy.from_tag("psychic")


def test_default_templates_declare_their_slots():
    t = default_migration_template(MigrationStrategy.WITH_DIFF)
    assert "diff" in t.required_slots
    assert "code" in t.required_slots
    assert "library" in t.required_slots


def test_custom_template_overrides_default():
    t = PromptTemplate(
        "terse", "Fix {code} for {library}.", frozenset({"code", "library"})
    )
    _, user = build_migration_prompt(
        MigrationStrategy.BLACK_BOX, "the code", LIB, template=t
    )
    assert user == "Fix the code for acme."


def test_bench_system_prompt_mentions_counting():
    assert "count how many functions" in BENCH_SYSTEM_PROMPT


def test_code_pair_prompt_shows_both_files_fenced():
    system, user = build_bench_prompt(
        CODE_PAIR_TRIAL, "def a(): pass\n", "def a(): return 1\n"
    )
    assert system == BENCH_SYSTEM_PROMPT
    assert user.count("```python") == 2
    assert "def a(): pass\n" in user
    assert "def a(): return 1\n" in user
    assert "[0-5]" in user


def test_diff_pair_prompt_shows_original_and_diff():
    diff_text = "--- a/f\n+++ b/f\n@@ -1 +1 @@\n-x\n+y\n"
    _, user = build_bench_prompt(DIFF_PAIR_TRIAL, "def a(): pass\n", diff_text)
    assert "diff file comparing" in user
    assert diff_text in user
    assert user.index("def a(): pass") < user.index(diff_text)


def test_unknown_trial_kind_rejected():
    with pytest.raises(ValueError):
        build_bench_prompt("essay", "a", "b")
