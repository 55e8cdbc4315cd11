import pytest

from vulnflow.minic import (
    ASSIGN,
    BLOCK_DELIM,
    CALL,
    DECL,
    FOR_HEADER,
    IF_HEADER,
    RETURN,
    WHILE_HEADER,
    IfConstruct,
    LoopConstruct,
    ParseError,
    parse_minic,
)


def real_statements(program):
    """Statement records that become graph nodes; braces and function
    headers stay in the line map as block delimiters."""
    return [s for s in program.statements if s.kind != BLOCK_DELIM]


def one(source):
    statements = real_statements(parse_minic(source))
    assert len(statements) == 1
    return statements[0]


def sets(stmt):
    return set(stmt.defs), set(stmt.strong_defs), set(stmt.uses)


def test_scalar_declaration_is_strong_def():
    stmt = one("int total = base + 2;\n")
    assert stmt.kind == DECL
    assert sets(stmt) == ({"total"}, {"total"}, {"base"})


def test_pointer_declaration_name_found_past_stars():
    stmt = one("char * cursor = dataBuffer;\n")
    assert sets(stmt) == ({"cursor"}, {"cursor"}, {"dataBuffer"})


def test_struct_declaration():
    stmt = one("struct image img;\n")
    assert sets(stmt) == ({"img"}, {"img"}, set())


def test_plain_assignment_kills():
    stmt = one("status = rc;\n")
    assert stmt.kind == ASSIGN
    assert sets(stmt) == ({"status"}, {"status"}, {"rc"})


def test_compound_assignment_also_uses_target():
    stmt = one("total += delta;\n")
    assert sets(stmt) == ({"total"}, {"total"}, {"total", "delta"})


def test_increment_statement():
    stmt = one("count++;\n")
    assert sets(stmt) == ({"count"}, {"count"}, {"count"})


def test_array_element_write_is_weak_and_uses_base_and_index():
    stmt = one("buf[pos] = fill;\n")
    assert sets(stmt) == ({"buf"}, set(), {"buf", "pos", "fill"})


def test_pointer_deref_write_is_weak():
    stmt = one("*cursor = 0;\n")
    assert sets(stmt) == ({"cursor"}, set(), {"cursor"})


def test_field_write_through_pointer_is_weak():
    stmt = one("hdr->size = n;\n")
    assert sets(stmt) == ({"hdr"}, set(), {"hdr", "n"})


def test_out_param_call_strongly_defines_first_argument():
    stmt = one("memset(dst, 0, n);\n")
    assert stmt.kind == CALL
    assert sets(stmt) == ({"dst"}, {"dst"}, {"dst", "n"})
    assert stmt.calls == ("memset",)


def test_unknown_call_defines_nothing():
    stmt = one("log_event(level, msg);\n")
    assert sets(stmt) == (set(), set(), {"level", "msg"})
    assert stmt.calls == ("log_event",)


def test_callee_name_is_not_a_use():
    stmt = one("n = readInput(buf, cap);\n")
    assert "readInput" not in stmt.uses
    assert sets(stmt) == ({"n"}, {"n"}, {"buf", "cap"})


def test_out_param_table_is_configurable():
    stmt = parse_minic("fill(dst, n);\n", out_params={"fill": (0,)}).statements[0]
    assert sets(stmt) == ({"dst"}, {"dst"}, {"dst", "n"})


def test_if_else_structure():
    src = "if (n > limit) {\nn = limit;\n} else {\nn++;\n}\n"
    program = parse_minic(src)
    assert [s.kind for s in real_statements(program)] == [IF_HEADER, ASSIGN, ASSIGN]
    (construct,) = program.body
    assert isinstance(construct, IfConstruct)
    assert construct.header == 1 and construct.then == (2,) and construct.orelse == (4,)
    header = program.statement(1)
    assert sets(header) == (set(), set(), {"n", "limit"})


def test_brace_on_next_line():
    program = parse_minic("while (left > 0)\n{\nleft--;\n}\n")
    (construct,) = program.body
    assert isinstance(construct, LoopConstruct)
    assert construct.header == 1 and construct.body == (3,)
    assert program.statement(1).kind == WHILE_HEADER


def test_for_header_merges_init_cond_step():
    stmt = one("for (i = 0; i < n; i++) {\n}\n")
    assert stmt.kind == FOR_HEADER
    assert sets(stmt) == ({"i"}, {"i"}, {"i", "n"})


def test_return_uses_value():
    program = parse_minic("return code;\n")
    stmt = program.statements[0]
    assert stmt.kind == RETURN and sets(stmt) == (set(), set(), {"code"})


def test_function_header_is_scoping_only():
    src = "int main(int argc) {\nint x = argc;\nreturn x;\n}\n"
    program = parse_minic(src)
    assert [s.line for s in real_statements(program)] == [2, 3]
    assert program.statement(1).kind == BLOCK_DELIM
    assert program.statement(1).defs == frozenset()
    assert program.statement(2).uses == frozenset({"argc"})


def test_comments_and_blank_lines_skipped():
    src = "// setup\nint a = 1;\n\na = a + 1; /* bump */\n"
    program = parse_minic(src)
    assert [s.line for s in real_statements(program)] == [2, 4]


def test_nested_constructs_round_trip():
    src = ("if (mode == 1) {\n"
           "while (n > 0) {\n"
           "n--;\n"
           "}\n"
           "} else {\n"
           "n = 0;\n"
           "}\n")
    program = parse_minic(src)
    (outer,) = program.body
    (inner,) = outer.then
    assert isinstance(inner, LoopConstruct) and inner.body == (3,)
    assert outer.orelse == (6,)


@pytest.mark.parametrize("source,needle", [
    ("a = 1\n", "';'"),
    ("if (a > 1)\nb = 2;\n", "'{'"),
    ("}\n", "unmatched"),
    ("if (a) {\n", "unclosed"),
    ("} else {\n", "unmatched"),
    ("int = 4;\n", "name"),
])
def test_parse_errors_carry_line_numbers(source, needle):
    with pytest.raises(ParseError) as err:
        parse_minic(source)
    assert needle in str(err.value).lower() or needle in str(err.value)
    assert isinstance(err.value.line, int)


def test_lex_errors_become_parse_errors():
    with pytest.raises(ParseError):
        parse_minic('s = "unterminated;\n')
