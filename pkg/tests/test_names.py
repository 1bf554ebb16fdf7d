import pytest
from hypothesis import given, strategies as st

from namechain.names import (
    EmptyNameError,
    LocalName,
    Name,
    NameSyntaxError,
    NameValue,
    ResourceValue,
    StringValue,
    parse_name,
    parse_resource_literal,
    serialize_name,
    serialize_resource_literal,
)
from namechain.resources import ResourceDescription

EXAMPLE_NAMES = [
    "(printer)",
    "(printer administrator)",
    "(documents research naming)",
    "(author[n=3])",
    "(alice location display[user=(supervisor)])",
]

SCENARIO_NAMES = [
    "(today meeting moderator email)",
    "(today meeting location occupant)",
    "(occupant files naming.ppt)",
]


def test_two_link_chain_structure():
    assert parse_name("(printer administrator)") == Name(
        (LocalName("printer"), LocalName("administrator"))
    )


def test_string_attribute_structure():
    assert parse_name("(author[n=3])") == Name(
        (LocalName("author", (("n", StringValue("3")),)),)
    )


def test_nested_name_attribute_structure():
    expected = Name(
        (
            LocalName("alice"),
            LocalName("location"),
            LocalName("display", (("user", NameValue(Name((LocalName("supervisor"),)))),)),
        )
    )
    assert parse_name("(alice location display[user=(supervisor)])") == expected


@pytest.mark.parametrize("text", EXAMPLE_NAMES + SCENARIO_NAMES)
def test_documented_names_round_trip(text):
    assert serialize_name(parse_name(text)) == text


def test_empty_name_rejected():
    with pytest.raises(EmptyNameError):
        parse_name("()")


def test_unbalanced_parenthesis_rejected():
    with pytest.raises(NameSyntaxError):
        parse_name("(display[user=(supervisor)], extra")


def test_serialize_single_local():
    assert serialize_name(Name((LocalName("printer"),))) == "(printer)"


def test_serialize_nested_name_value():
    name = Name(
        (LocalName("display", (("user", NameValue(Name((LocalName("supervisor"),)))),)),)
    )
    assert serialize_name(name) == "(display[user=(supervisor)])"


def test_serialize_resource_value_uses_hex_literal():
    description = ResourceDescription(b"\xab" * 32, b"x")
    name = Name((LocalName("display", (("user", ResourceValue(description)),)),))
    text = serialize_name(name)
    assert text == f"(display[user=[{'ab' * 32} 78]])"
    assert parse_name(text) == name


def test_multiple_spaces_accepted_single_space_emitted():
    name = parse_name("(printer    administrator)")
    assert serialize_name(name) == "(printer administrator)"


def test_attribute_order_preserved():
    name = parse_name("(a[z=1,y=2,x=3])")
    assert [label for label, _ in name.locals[0].attributes] == ["z", "y", "x"]
    assert serialize_name(name) == "(a[z=1,y=2,x=3])"


def test_duplicate_attribute_label_rejected():
    with pytest.raises(NameSyntaxError):
        parse_name("(a[x=1,x=2])")


@pytest.mark.parametrize(
    "text",
    [
        "",
        "printer",
        "(printer",
        "printer)",
        "( )",
        "(a )",
        "( a)",
        "(a,b)",
        "(a[])",
        "(a[x])",
        "(a[x=])",
        "(a[=1])",
        "(a[x=1)",
        "(a[x=1]extra])",
        "(a[x=1,,y=2])",
        "(a b) ",
        "(a b)x",
        "(a b))",
        "(a!)",
        "(a[x=[abc def]])",
        "(a[x=[" + "00" * 32 + " 7]])",
        "(a[x=[" + "AB" * 32 + " 78]])",
        "(a[x=[" + "00" * 32 + "  78]])",
        "(a[x=[" + "00" * 32 + "78]])",
    ],
)
def test_malformed_inputs_rejected(text):
    with pytest.raises(NameSyntaxError):
        parse_name(text)


def test_syntax_error_carries_position():
    with pytest.raises(NameSyntaxError) as excinfo:
        parse_name("(a b!)")
    assert excinfo.value.position == 4


def test_parse_resource_literal_zero_case():
    description = parse_resource_literal("[" + "00" * 32 + " " + "]")
    assert description == ResourceDescription(b"\x00" * 32, b"")


def test_parse_resource_literal_rejects_short_identifier():
    with pytest.raises(NameSyntaxError):
        parse_resource_literal("[abc def]")


def test_parse_resource_literal_rejects_trailing_input():
    with pytest.raises(NameSyntaxError):
        parse_resource_literal("[" + "00" * 32 + " ff]z")


def test_local_name_invariants_enforced_at_construction():
    with pytest.raises(ValueError):
        LocalName("")
    with pytest.raises(ValueError):
        LocalName("a b")
    with pytest.raises(ValueError):
        LocalName("a", (("x", StringValue("1")), ("x", StringValue("2"))))
    with pytest.raises(ValueError):
        Name(())


# --- generated round-trips

tokens = st.from_regex(r"[A-Za-z0-9._-]{1,10}", fullmatch=True)
descriptions = st.builds(
    ResourceDescription,
    st.binary(min_size=32, max_size=32),
    st.binary(min_size=0, max_size=64),
)


def _names_strategy():
    values = st.deferred(
        lambda: st.one_of(
            st.builds(StringValue, tokens),
            st.builds(ResourceValue, descriptions),
            st.builds(NameValue, names),
        )
    )
    local_names = st.builds(
        lambda primary, attrs: LocalName(primary, tuple(attrs.items())),
        tokens,
        st.dictionaries(tokens, values, max_size=3),
    )
    names = st.builds(
        lambda locals_: Name(tuple(locals_)),
        st.lists(local_names, min_size=1, max_size=4),
    )
    return names


@given(_names_strategy())
def test_round_trip_is_identity(name):
    assert parse_name(serialize_name(name)) == name


@given(st.binary(min_size=32, max_size=32), st.binary(min_size=0, max_size=64))
def test_resource_literal_round_trip(type_id, spec):
    description = ResourceDescription(type_id, spec)
    assert parse_resource_literal(serialize_resource_literal(description)) == description
