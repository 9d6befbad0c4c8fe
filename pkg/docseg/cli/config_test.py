import argparse

import pytest

from docseg.cli.config import GLOBAL, apply_file_defaults, config_path, fingerprint, read_config_file


def test_read_config_file(tmp_path):
    path = tmp_path / "docseg.cfg"
    path.write_text("# tiny run\nepochs = 3\nlearning-rate = 0.01\nuse_phone = yes\n")
    assert read_config_file(path) == {GLOBAL: dict(epochs="3", learning_rate="0.01", use_phone="yes")}


def test_sections_group_keys(tmp_path):
    path = tmp_path / "docseg.cfg"
    path.write_text("epochs = 3\n[train]\nmax-sentences = 40\n[synth]\nmax_sentences = 9\n")
    assert read_config_file(path) == {GLOBAL: dict(epochs="3"), "train": dict(max_sentences="40"),
                                      "synth": dict(max_sentences="9")}


def test_malformed_file(tmp_path):
    path = tmp_path / "docseg.cfg"
    path.write_text("epochs\n")
    with pytest.raises(ValueError, match="malformed"):
        read_config_file(path)


def test_config_path_from_environment(monkeypatch):
    monkeypatch.setenv("DOCSEG_CONFIG", "/tmp/from-env.cfg")
    assert config_path(None) == "/tmp/from-env.cfg"
    assert config_path("given.cfg") == "given.cfg"
    monkeypatch.delenv("DOCSEG_CONFIG")
    assert config_path(None) is None


def test_file_values_become_typed_defaults():
    sub = argparse.ArgumentParser()
    sub.add_argument("--epochs", type=int, default=2)
    sub.add_argument("--use-phone", action="store_true")
    sub.add_argument("--steps", type=int, nargs="+", default=[1])
    apply_file_defaults(dict(train=sub), {GLOBAL: dict(epochs="5", use_phone="true", steps="1 3 5")})
    args = sub.parse_args([])
    assert (args.epochs, args.use_phone, args.steps) == (5, True, [1, 3, 5])
    assert sub.parse_args(["--epochs", "7"]).epochs == 7


def test_unknown_key():
    with pytest.raises(ValueError, match="epochz"):
        apply_file_defaults(dict(train=argparse.ArgumentParser()), {GLOBAL: dict(epochz="5")})
    with pytest.raises(ValueError, match="epochz"):
        apply_file_defaults(dict(train=argparse.ArgumentParser()), dict(train=dict(epochz="5")))
    with pytest.raises(ValueError, match="trian"):
        apply_file_defaults(dict(train=argparse.ArgumentParser()), dict(trian=dict(epochs="5")))


def two_subcommands():
    synth, train = argparse.ArgumentParser(), argparse.ArgumentParser()
    synth.add_argument("--max-sentences", type=int, default=12)
    train.add_argument("--max-sentences", type=int, default=60)
    for sub in (synth, train):
        sub.add_argument("--seed", type=int, default=0)
    return dict(synth=synth, train=train)


def test_ambiguous_global_key_rejected():
    with pytest.raises(ValueError, match="max_sentences"):
        apply_file_defaults(two_subcommands(), {GLOBAL: dict(max_sentences="40")})


def test_section_keys_reach_one_subcommand():
    subs = two_subcommands()
    apply_file_defaults(subs, {GLOBAL: dict(seed="3"), "train": dict(max_sentences="40", seed="4")})
    synth, train = subs["synth"].parse_args([]), subs["train"].parse_args([])
    assert (synth.max_sentences, synth.seed) == (12, 3)
    assert (train.max_sentences, train.seed) == (40, 4)


def test_fingerprint():
    a = fingerprint(dict(seed=0, epochs=2))
    assert len(a) == 12
    assert a == fingerprint(dict(epochs=2, seed=0))
    assert a != fingerprint(dict(seed=1, epochs=2))
