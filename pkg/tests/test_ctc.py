import numpy as np
import pytest

import oracles
from handscribe.errors import InfeasibleLabelError
from handscribe.recognizer import ctc
from handscribe.recognizer.charset import CharSet


class TestCtcLoss:
    def test_single_frame_uniform(self):
        loss, _ = ctc.ctc_loss(np.zeros((1, 2)), [0])
        assert loss == pytest.approx(-np.log(0.5))

    def test_two_frames_uniform_three_paths(self):
        # paths a., .a, aa out of 4 -> p = 0.75
        loss, _ = ctc.ctc_loss(np.zeros((2, 2)), [0])
        assert loss == pytest.approx(-np.log(0.75))
        assert loss == pytest.approx(0.287682, abs=1e-6)

    def test_empty_label_all_blank(self):
        logits = np.log(np.array([[0.3, 0.7], [0.2, 0.8]]))
        loss, _ = ctc.ctc_loss(logits, [])
        assert np.exp(-loss) == pytest.approx(0.7 * 0.8)

    def test_matches_brute_force_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            num_frames = int(rng.integers(1, 5))
            num_classes = int(rng.integers(2, 4))
            logits = rng.normal(0, 2.0, (num_frames, num_classes))
            blank = num_classes - 1
            for label in oracles.all_labelings(num_frames, num_classes, blank):
                loss, _ = ctc.ctc_loss(logits, list(label))
                expected = oracles.label_probability(logits, label, blank)
                assert np.exp(-loss) == pytest.approx(expected, abs=1e-9)

    def test_total_probability_is_one(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            num_frames = int(rng.integers(1, 5))
            num_classes = int(rng.integers(2, 4))
            logits = rng.normal(0, 1.5, (num_frames, num_classes))
            blank = num_classes - 1
            total = sum(
                np.exp(-ctc.ctc_loss(logits, list(lab))[0])
                for lab in oracles.all_labelings(num_frames, num_classes, blank)
            )
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_loss_in_unit_interval(self):
        rng = np.random.default_rng(2)
        logits = rng.normal(0, 3, (6, 5))
        loss, _ = ctc.ctc_loss(logits, [0, 1])
        assert 0.0 < np.exp(-loss) <= 1.0

    def test_infeasible_label(self):
        with pytest.raises(InfeasibleLabelError):
            ctc.ctc_loss(np.zeros((2, 3)), [0, 0])  # repeat needs 3 frames
        with pytest.raises(InfeasibleLabelError):
            ctc.ctc_loss(np.zeros((2, 3)), [0, 1, 0])

    def test_blank_in_label_rejected(self):
        with pytest.raises(InfeasibleLabelError):
            ctc.ctc_loss(np.zeros((2, 3)), [2])

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        worst = 0.0
        for seed in range(20):
            r = np.random.default_rng(seed)
            logits = r.normal(0, 1.5, (4, 4))
            length = int(r.integers(0, 3))
            label = [int(v) for v in r.integers(0, 3, length)]
            if ctc.min_frames(label) > 4:
                label = label[:1]
            _, grad = ctc.ctc_loss(logits, label)
            _, numeric = oracles.central_difference(
                lambda x: ctc.ctc_loss(x.reshape(4, 4), label)[0],
                logits, h=1e-3)
            worst = max(worst, oracles.max_relative_error(grad.ravel(), numeric))
        assert worst < 1e-4


class TestGreedy:
    charset = CharSet("ab")

    def test_all_blank(self):
        logits = np.zeros((5, 3))
        logits[:, 2] = 4.0
        assert ctc.greedy_decode(logits, self.charset) == ""

    def test_collapse_rule(self):
        # path a a blank a -> "aa"
        path = [0, 0, 2, 0]
        logits = np.full((4, 3), -5.0)
        for t, cls in enumerate(path):
            logits[t, cls] = 5.0
        assert ctc.greedy_decode(logits, self.charset) == "aa"

    def test_argmax_tie_to_lower_class(self):
        logits = np.zeros((1, 3))
        assert ctc.greedy_decode(logits, self.charset) == "a"


class TestBeam:
    def test_ambiguous_two_frames_beats_greedy(self):
        cs = CharSet("a")
        logits = np.log(np.array([[0.4, 0.6], [0.4, 0.6]]))
        assert ctc.greedy_decode(logits, cs) == ""
        assert ctc.beam_decode(logits, cs, beam_width=4) == "a"
        text, logprob = ctc.beam_decode_scored(logits, cs, 4)
        assert np.exp(logprob) == pytest.approx(0.64)

    def test_dominant_path_equals_greedy(self):
        rng = np.random.default_rng(4)
        cs = CharSet("abc")
        for _ in range(30):
            path = rng.integers(0, 4, 6)
            logits = np.full((6, 4), -8.0)
            for t, cls in enumerate(path):
                logits[t, cls] = 8.0
            assert ctc.beam_decode(logits, cs, beam_width=1) == ctc.greedy_decode(logits, cs)

    def test_exact_map_with_wide_beam(self):
        rng = np.random.default_rng(5)
        cs = CharSet("ab")
        for _ in range(120):
            num_frames = int(rng.integers(1, 4))
            logits = rng.normal(0, 2, (num_frames, 3))
            want, _ = oracles.map_labeling(logits, blank=2)
            got = ctc.beam_decode(logits, cs, beam_width=64)
            assert tuple(cs.encode(got)) == want

    def test_total_log_probability_nonpositive(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            logits = rng.normal(0, 2, (5, 4))
            finals = ctc.beam_search(logits, blank=3, beam_width=8)
            total = np.logaddexp.reduce([lp for _, lp in finals])
            assert total <= 1e-12
            assert finals[0][1] <= 0.0


class TestCharset:
    def test_encode_decode(self):
        cs = CharSet("abc")
        assert cs.encode("cab") == [2, 0, 1]
        assert cs.decode([0, 2]) == "ac"
        assert cs.blank_index == 3
        assert cs.num_classes == 4

    def test_unknown_char(self):
        with pytest.raises(InfeasibleLabelError):
            CharSet("abc").encode("xyz")

    def test_default_charset_has_79(self):
        from handscribe.recognizer import default_charset
        cs = default_charset()
        assert len(cs.chars) == 79
        assert cs.blank_index == 79
        assert " " in cs.chars and "a" in cs.chars and "Z" in cs.chars

    def test_load_charset_file(self, tmp_path):
        from handscribe.recognizer import load_charset
        from handscribe.errors import ValidationError
        good = tmp_path / "chars.txt"
        from handscribe.recognizer import default_charset
        good.write_text("\n".join(default_charset().chars) + "\n", encoding="utf-8")
        assert load_charset(good).chars == default_charset().chars
        bad = tmp_path / "short.txt"
        bad.write_text("a\nb\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            load_charset(bad)
