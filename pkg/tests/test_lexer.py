import pytest
from hypothesis import given
from hypothesis import strategies as st

from vulnflow.lexer import CHAR, ID, NUM, OP, STR, LexError, Token, lex, strip_comments, token_texts


def kinds(code):
    return [(t.kind, t.text) for t in lex(code)]


def test_identifiers_numbers_and_operators():
    assert kinds("dest = src + 10;") == [
        (ID, "dest"), (OP, "="), (ID, "src"), (OP, "+"), (NUM, "10"), (OP, ";"),
    ]


def test_longest_match_operators():
    texts = token_texts("a <<= b >> c -> d ++ <=")
    assert texts == ["a", "<<=", "b", ">>", "c", "->", "d", "++", "<="]


def test_string_and_char_literals_stay_single_tokens():
    tokens = lex("printf(\"a;b \\\" c\", 'x');")
    by_kind = [(t.kind, t.text) for t in tokens]
    assert (STR, '"a;b \\" c"') in by_kind
    assert (CHAR, "'x'") in by_kind
    # Payload punctuation must not leak out as operator tokens.
    assert sum(1 for k, t in by_kind if k == OP and t == ";") == 1


def test_hex_and_suffixed_numbers():
    assert [t.text for t in lex("0xFF 100UL 3.5")] == ["0xFF", "100UL", "3.5"]


def test_offsets_point_into_source():
    code = "abc = 42;"
    for token in lex(code):
        assert code[token.offset:token.offset + len(token.text)] == token.text


def test_is_identifier_excludes_keywords_and_type_words():
    assert Token(ID, "dataBuffer", 0).is_identifier()
    assert not Token(ID, "return", 0).is_identifier()
    assert not Token(ID, "unsigned", 0).is_identifier()
    assert not Token(NUM, "7", 0).is_identifier()


def test_strip_comments():
    assert strip_comments("a = 1; // set a") == "a = 1; "
    assert strip_comments("a = /* mid */ 1;") == "a =  1;"
    assert strip_comments('s = "// not a comment";') == 's = "// not a comment";'


def test_unterminated_string_raises_with_offset():
    with pytest.raises(LexError) as err:
        lex('s = "oops;')
    assert err.value.offset == 4


def test_unknown_byte_raises():
    with pytest.raises(LexError):
        lex("a = 1 @ 2;")


_WORDS = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,6}", fullmatch=True)
_NUMBERS = st.from_regex(r"[0-9]{1,5}", fullmatch=True)
_OPS = st.sampled_from(["+", "-", "*", "<<", "->", "++", "==", "<=", ";", ",", "(", ")", "[", "]"])


@given(st.lists(st.one_of(_WORDS, _NUMBERS, _OPS), max_size=30))
def test_space_separated_tokens_round_trip(texts):
    assert token_texts(" ".join(texts)) == texts
