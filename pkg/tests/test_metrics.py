import warnings

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from evofda.metrics import (
    FactSyntaxError,
    class_coupling,
    class_lack_of_cohesion,
    count_loc,
    parse_code_model,
    project_complexity,
)


def model(text):
    return parse_code_model(text)


# ---- parsing


def test_empty_file_is_valid():
    m = model("")
    assert m.classes == {} and m.loc == 0
    assert model("loc 42\n").loc == 42


def test_minimal_class():
    m = model("class A\nfield A.f\nmethod A.m\naccess A.m f\n")
    assert list(m.classes) == ["A"]
    assert m.classes["A"].methods["m"].accessed_fields == {"f"}


def test_undeclared_field():
    with pytest.raises(FactSyntaxError, match="undeclared field") as ei:
        model("class A\nfield A.f\nmethod A.m\naccess A.m g\n")
    assert ei.value.lineno == 4


@pytest.mark.parametrize(
    "text, msg",
    [
        ("class A\nclass A\n", "duplicate class"),
        ("method A.m\n", "undeclared class"),
        ("class A\naccess A.m f\n", "undeclared method"),
        ("loc ten\n", "loc"),
        ("loc 1\nloc 2\n", "duplicate loc"),
        ("frobnicate x\n", "unknown statement"),
        ("class A\nfield f\n", "expected <Class>.<member>"),
    ],
)
def test_malformed(text, msg):
    with pytest.raises(FactSyntaxError, match=msg):
        model(text)


def test_comments_dotted_names_and_overloads():
    m = model(
        "# header\n"
        "class org.x.Parser   # qualified\n"
        "method org.x.Parser.parse/2\n"
        "ref org.x.Parser.parse/2 org.x.Token\n"
    )
    assert "parse/2" in m.classes["org.x.Parser"].methods
    assert class_coupling(m, "org.x.Parser") == 1


# ---- coupling


def test_coupling_self_reference_excluded():
    m = model("class A\nmethod A.m\nref A.m A\n")
    assert class_coupling(m, "A") == 0


def test_coupling_distinct_targets():
    m = model("class A\nmethod A.m\nref A.m B\nref A.m C\n")
    assert class_coupling(m, "A") == 2


def test_coupling_counts_each_target_once():
    m = model("class A\nmethod A.m1\nmethod A.m2\nref A.m1 B\nref A.m2 B\n")
    assert class_coupling(m, "A") == 1
    assert class_coupling(m, "A", mode="instance") == 2


def test_field_type_counts_as_coupling():
    m = model("class A\nfield A.b B\nfield A.me A\nfield A.n\n")
    assert class_coupling(m, "A") == 1
    assert m.external_classes == {"B"}


def test_coupling_unknown_class_and_mode():
    m = model("class A\n")
    with pytest.raises(KeyError):
        class_coupling(m, "Z")
    with pytest.raises(ValueError):
        class_coupling(m, "A", mode="weird")


# ---- cohesion


def test_lcoh_shared_field_is_cohesive():
    m = model("class A\nfield A.f1\nmethod A.m1\nmethod A.m2\naccess A.m1 f1\naccess A.m2 f1\n")
    assert class_lack_of_cohesion(m, "A") == 0


def test_lcoh_disjoint_fields():
    m = model(
        "class A\nfield A.f1\nfield A.f2\nmethod A.m1\nmethod A.m2\n"
        "access A.m1 f1\naccess A.m2 f2\n"
    )
    assert class_lack_of_cohesion(m, "A") == 100


def test_lcoh_degenerate_cases():
    assert class_lack_of_cohesion(model("class A\nfield A.f\nmethod A.m\n"), "A") == 0
    assert class_lack_of_cohesion(model("class A\nmethod A.m\nmethod A.n\n"), "A") == 0


def test_lcoh_untouched_fields_clip_to_100():
    m = model("class A\nfield A.f\nfield A.g\nmethod A.m\nmethod A.n\n")
    assert class_lack_of_cohesion(m, "A") == 100


# ---- project level


def test_single_class_snapshot():
    m = model(
        "loc 10\nclass A\nfield A.f1\nfield A.f2\nmethod A.m1\nmethod A.m2\n"
        "access A.m1 f1\naccess A.m2 f1\naccess A.m2 f2\nref A.m1 B\nref A.m2 C\n"
    )
    # abar = 3/2, (1.5 - 2)/(1 - 2) = 0.5
    s = project_complexity(m)
    assert (s.cpl, s.lcoh, s.cplxlcoh, s.loc) == (2.0, 50.0, 100.0, 10)


def test_two_class_means():
    m = model(
        "class A\nmethod A.m\nref A.m X\n"
        "class B\nfield B.f1\nfield B.f2\nmethod B.m1\nmethod B.m2\n"
        "access B.m1 f1\naccess B.m2 f2\nref B.m1 X\nref B.m1 Y\nref B.m2 Z\n"
    )
    s = project_complexity(m)
    assert (s.cpl, s.lcoh, s.cplxlcoh) == (2.0, 50.0, 100.0)


def test_empty_model_rejected():
    with pytest.raises(ValueError):
        project_complexity(model("loc 5\n"))


# ---- LOC


def test_count_loc_examples():
    assert count_loc("") == 0
    assert count_loc("int a;\n\nint b;\n// note\n\nint c;\n") == 3
    src = "int a; /* start\n  more\n  more\n end */ int b;\n"
    assert count_loc(src) == 2


def test_count_loc_string_literals():
    assert count_loc('s = "// not a comment";\n') == 1
    assert count_loc("s = '/*';\nint x;\n") == 2
    assert count_loc("/* a */ /* b */\n") == 0


def test_count_loc_unterminated_block_warns():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        assert count_loc("int a;\n/* open\nint b;\n") == 1
    assert any("unterminated" in str(x.message) for x in w)


# ---- properties

FIELDS = ["f0", "f1", "f2", "f3"]


@st.composite
def class_text(draw, name="A"):
    nf = draw(st.integers(1, 4))
    nm = draw(st.integers(1, 5))
    lines = [f"class {name}"] + [f"field {name}.{f}" for f in FIELDS[:nf]]
    for j in range(nm):
        lines.append(f"method {name}.m{j}")
        for f in draw(st.sets(st.sampled_from(FIELDS[:nf]))):
            lines.append(f"access {name}.m{j} {f}")
        for t in draw(st.lists(st.sampled_from(["B", "C", "D", name]), max_size=4)):
            lines.append(f"ref {name}.m{j} {t}")
    return "\n".join(lines) + "\n", nf, nm


@settings(max_examples=150, deadline=None)
@given(class_text())
def test_lcoh_bounded_and_product_exact(ct):
    text, _, _ = ct
    m = model(text)
    v = class_lack_of_cohesion(m, "A")
    assert 0 <= v <= 100
    s = project_complexity(m)
    assert s.cplxlcoh == s.cpl * s.lcoh


@settings(max_examples=150, deadline=None)
@given(class_text())
def test_all_field_method_never_raises_lcoh(ct):
    text, nf, nm = ct
    # a one-method class scores 0 by the degenerate rule, so the property
    # only holds from two methods up (see the boundary test below)
    assume(nm >= 2)
    before = class_lack_of_cohesion(model(text), "A")
    extra = "method A.all\n" + "".join(f"access A.all {f}\n" for f in FIELDS[:nf])
    after = class_lack_of_cohesion(model(text + extra), "A")
    assert after <= before + 1e-12


def test_all_field_method_from_one_method_boundary():
    text = "class A\nfield A.f0\nmethod A.m0\n"
    assert class_lack_of_cohesion(model(text), "A") == 0
    grown = model(text + "method A.all\naccess A.all f0\n")
    assert class_lack_of_cohesion(grown, "A") == 100


@settings(max_examples=100, deadline=None)
@given(class_text())
def test_coupling_ignores_duplicate_refs(ct):
    text, _, _ = ct
    refs = [ln for ln in text.splitlines() if ln.startswith("ref ")]
    doubled = text + "".join(r + "\n" for r in refs)
    assert class_coupling(model(doubled), "A") == class_coupling(model(text), "A")


@settings(max_examples=60, deadline=None)
@given(class_text(name="K0"), st.integers(2, 5))
def test_identical_classes_mean_idempotent(ct, n):
    text, _, _ = ct
    single = project_complexity(model(text))
    # self references are renamed with the class, so every copy is identical
    copies = "".join(text.replace("K0", f"K{i}") for i in range(n))
    many = project_complexity(model(copies))
    assert (many.cpl, many.lcoh) == pytest.approx((single.cpl, single.lcoh))
