import pytest

from docseg.corpus.wiki import parse_wiki_text, split_sentences


def test_two_paragraphs():
    doc = parse_wiki_text("A b. C d.\n\nE f.\n", granularity="paragraph")
    assert doc.labels == (False, True, True)
    assert doc.sentences[0].words == ("A", "b.")


def test_single_paragraph():
    doc = parse_wiki_text("One. Two! Three?", granularity="paragraph")
    assert doc.labels == (False, False, True)


def test_section_heading_discarded():
    raw = "First one. First two.\n== Heading ==\nSecond one. Second two.\n"
    doc = parse_wiki_text(raw, granularity="section")
    assert doc.labels == (False, True, False, True)
    assert all("==" not in w for s in doc.sentences for w in s.words)
    assert all("Heading" not in w for s in doc.sentences for w in s.words)


def test_section_mode_ignores_blank_lines():
    raw = "A. B.\n\nC.\n== H ==\nD.\n"
    doc = parse_wiki_text(raw, granularity="section")
    assert doc.labels == (False, False, True, True)


def test_paragraph_mode_splits_on_heading_too():
    raw = "A. B.\n== H ==\nC.\n"
    doc = parse_wiki_text(raw, granularity="paragraph")
    assert doc.labels == (False, True, True)


def test_fullwidth_punctuation():
    assert split_sentences("我 爱 你。他 好！") == [["我", "爱", "你。"], ["他", "好！"]]


def test_empty_segments_skipped():
    raw = "\n\n== A ==\n\n== B ==\nOnly one.\n\n\n"
    doc = parse_wiki_text(raw, granularity="section")
    assert doc.labels == (True,)


def test_sentences_preserved_in_order():
    raw = "a b. c.\n\nd e f. g.\n== X ==\nh."
    doc = parse_wiki_text(raw, granularity="paragraph")
    assert [s.words for s in doc.sentences] == [("a", "b."), ("c.",), ("d", "e", "f."), ("g.",), ("h.",)]


@pytest.mark.parametrize("raw", ["", "   \n\n", "== Only heading =="])
def test_empty_document(raw):
    with pytest.raises(ValueError, match="empty document"):
        parse_wiki_text(raw, granularity="section")
