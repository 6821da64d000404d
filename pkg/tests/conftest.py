import itertools

import pytest

from isomine.corpus import (Corpus, DecedentRecord, Homeless, MaritalStatus,
                            NarrativeBundle, PhysicalHealthProblem,
                            RaceEthnicity, RelationshipStatus, Sex,
                            SexualOrientation, Transgender)

_counter = itertools.count()


def make_record(**overrides) -> DecedentRecord:
    """A valid record with boring defaults; override any field."""
    narratives = overrides.pop("narratives", None)
    if narratives is None:
        narratives = NarrativeBundle(
            le_narrative=overrides.pop("le_narrative", None),
            cme_narrative=overrides.pop("cme_narrative", None),
            le_summary=overrides.pop("le_summary", None),
            cme_summary=overrides.pop("cme_summary", None),
        )
    base = dict(
        id=f"T{next(_counter):06d}",
        incident_year=2010,
        sex=Sex.MALE,
        race_ethnicity=RaceEthnicity.WHITE,
        sexual_orientation=SexualOrientation.NOT_REPORTED,
        transgender=Transgender.NO_OR_UNKNOWN,
        marital_status=MaritalStatus.MARRIED,
        relationship_status=RelationshipStatus.IN_RELATIONSHIP,
        homeless=Homeless.NO,
        physical_health_problem=PhysicalHealthProblem.NO_OR_UNKNOWN,
        age=45,
        num_substances=None,
        narratives=narratives,
    )
    base.update(overrides)
    return DecedentRecord(**base)


def make_corpus(records) -> Corpus:
    return Corpus(records=list(records))


@pytest.fixture
def record_factory():
    return make_record


@pytest.fixture
def corpus_factory():
    return make_corpus
