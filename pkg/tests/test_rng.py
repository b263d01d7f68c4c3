import numpy as np
import pytest

from mdabc.rng import CONTROL_ID, OBSERVED_ID, RngStream, as_stream, generators_for, particle_generators


def test_same_address_same_draws():
    a = RngStream(5, replication=1, particle=2, stage=3, lane=4).generator().random(10)
    b = RngStream(5, replication=1, particle=2, stage=3, lane=4).generator().random(10)
    assert np.array_equal(a, b)


def test_every_address_word_matters():
    base = RngStream(5, replication=1, particle=2, stage=3, lane=4)
    ref = base.generator().random(4)
    for field, value in (("master_seed", 6), ("replication", 2), ("particle", 3), ("stage", 4), ("lane", 5)):
        assert not np.array_equal(ref, base.at(**{field: value}).generator().random(4)), field


def test_reserved_ids_are_valid_addresses():
    a = RngStream(1, particle=OBSERVED_ID).generator().random()
    b = RngStream(1, particle=CONTROL_ID).generator().random()
    assert a != b


def test_long_streams_do_not_collide():
    # the generator's own counter lives in a separate word, so consecutive
    # particles never share blocks however much each one draws
    a = RngStream(1, particle=0).generator().random(100_000)
    b = RngStream(1, particle=1).generator().random(1000)
    assert not np.isin(b, a).any()


def test_generators_for_matches_individual_streams():
    base = RngStream(11, replication=3, lane=2)
    gens = generators_for(base, [4, 9], stage=7)
    for pid, g in zip([4, 9], gens):
        assert np.array_equal(g.random(5), base.at(particle=pid, stage=7).generator().random(5))
    gens = particle_generators(base, 3, stage=1, start=10)
    assert np.array_equal(gens[2].random(3), base.at(particle=12, stage=1).generator().random(3))


def test_validation_and_coercion():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(1, stage=2 ** 64)
    s = RngStream(3)
    assert as_stream(s) is s
    assert as_stream(3) == s
