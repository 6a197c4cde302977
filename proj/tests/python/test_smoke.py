import itertools
import math
import os
import pathlib
import random

import pytest

import jointnlu

DATA = pathlib.Path(os.environ.get("JOINTNLU_TEST_DATA_DIR", pathlib.Path(__file__).parents[1] / "data"))
SMALL = DATA / "snips_like_small"

CASE_STUDY = ["O", "O", "O"] + ["B-movie-name"] + ["I-movie-name"] * 4 + ["B-timeRange"] + ["I-timeRange"] * 2


def test_split_and_tokenize():
    assert jointnlu.split_words("  Find ME a movie ") == ["find", "me", "a", "movie"]
    vocab = jointnlu.build_vocab([["playing", "played", "play"]], 40)
    assert vocab.tokenize("play") == ["play"]
    assert "".join(p.removeprefix("##") for p in vocab.tokenize("playing")) == "playing"
    assert vocab.tokenize("☃") == ["[UNK]"]
    assert len(vocab) == len(vocab.tokens)


def test_chunks_and_scores():
    assert jointnlu.extract_chunks(CASE_STUDY) == [("movie-name", 3, 7), ("timeRange", 8, 10)]
    spurious = ["B-playlist"] + CASE_STUDY[1:]
    s = jointnlu.slot_f1([CASE_STUDY], [spurious])
    assert s["precision"] == pytest.approx(2 / 3)
    assert s["recall"] == 1.0
    assert s["f1"] == pytest.approx(0.8)
    assert jointnlu.intent_accuracy(["a", "b"], ["a", "c"]) == 0.5
    assert jointnlu.frame_accuracy(["a"], ["a"], [["O"]], [["B-x"]]) == 0.0
    with pytest.raises(jointnlu.ShapeError):
        jointnlu.slot_f1([["O"]], [["O", "O"]])


def test_crf_matches_enumeration():
    rng = random.Random(4)
    for n, l in [(1, 3), (3, 2), (4, 3)]:
        e = [[rng.gauss(0, 1) for _ in range(l)] for _ in range(n)]
        t = [[rng.gauss(0, 1) for _ in range(l)] for _ in range(l)]
        start = [rng.gauss(0, 1) for _ in range(l)]
        end = [rng.gauss(0, 1) for _ in range(l)]

        def score(y):
            s = start[y[0]] + end[y[-1]] + sum(e[i][y[i]] for i in range(n))
            return s + sum(t[y[i]][y[i + 1]] for i in range(n - 1))

        scores = {y: score(y) for y in itertools.product(range(l), repeat=n)}
        log_z = math.log(sum(math.exp(v) for v in scores.values()))
        assert jointnlu.crf_log_partition(e, t, start, end) == pytest.approx(log_z, abs=1e-10)
        labels, best = jointnlu.crf_viterbi(e, t, start, end)
        assert tuple(labels) == max(scores, key=scores.get)
        assert best == pytest.approx(max(scores.values()), abs=1e-10)


def test_dataset_stats():
    assert jointnlu.dataset_stats(SMALL)["train"] == 32
    with pytest.raises(jointnlu.DataError):
        jointnlu.dataset_stats(DATA / "missing")


def test_train_predict_evaluate(tmp_path):
    config = {
        "data_dir": str(SMALL),
        "out_dir": str(tmp_path / "run"),
        "variant": "crf",
        "encoder": {"num_layers": 1, "hidden_size": 16, "num_heads": 2, "intermediate_size": 32},
        "train": {"max_epochs": 3, "learning_rate": 1e-3, "batch_size": 8, "max_len": 32, "eval_threads": 1},
    }
    result = jointnlu.train(config)
    assert len(result["history"]) == 3
    assert 1 <= result["best_epoch"] <= 3
    model = jointnlu.Model.load(result["checkpoint"])
    assert model.variant == "crf"
    assert model.intents[0] == "UNK"
    p = model.predict("book a table for two in paris")
    assert len(p["slots"]) == 7
    assert p["intent"] in model.intents
    assert p == model.predict("book a table for two in paris")
    m = model.evaluate(SMALL, "valid", threads=1)
    selected = result["history"][result["best_epoch"] - 1]["dev"]
    assert m["Sent"] == selected["Sent"]
    assert set(m) >= {"Intent", "Slot", "Sent"}


def test_errors():
    with pytest.raises(jointnlu.ConfigError):
        jointnlu.train({"data_dir": str(SMALL), "variant": "lstm"})
    with pytest.raises(jointnlu.FormatError):
        jointnlu.Model.load(DATA / "snips_like_small" / "train" / "label")
    assert issubclass(jointnlu.DataError, jointnlu.Error)
