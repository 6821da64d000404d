"""Planted phrase banks for the synthetic corpus generator.

Three banks per topic:
  * narrative_positive - sentences embedded in LE/CME narratives of records
    whose ground truth is true; every sentence is matchable by the shipped
    starter lexicon (enforced by tests).
  * narrative_decoy - sentences that the lexicon also matches but whose
    ground truth stays false; their context vocabulary is deliberately
    disjoint from the positive bank so a narrative classifier can refine
    the regex matches.
  * summary_phrases - short theme-indicative snippets injected into
    circumstance summaries; these drive topic discovery.

Filler banks are regex-silent: no filler sentence may match any starter
pattern (also enforced by tests).
"""

from __future__ import annotations

from .taxonomy import TopicId

KIN = (
    "The victim's sister",
    "The victim's brother",
    "The victim's mother",
    "The victim's father",
    "A close friend",
    "A coworker",
    "A neighbor",
)

TOPIC_PHRASES: dict[TopicId, dict[str, list[str]]] = {
    TopicId.CHRONIC_SOCIAL_ISOLATION: {
        "narrative_positive": [
            "{kin} explained that the victim was very much a loner and was very cynical.",
            "Neighbors said the victim had been socially isolated for years and rarely left the home.",
            "{kin} reported the victim had no friends and had withdrawn from all social contact.",
            "{kin} described the victim as a loner who had been isolated from everyone for a long time.",
        ],
        "narrative_decoy": [
            "The residence sits on an isolated stretch of gravel county road far outside town.",
            "The cabin was isolated from the paved highway by several miles of dense forest.",
            "The barn stood on an isolated parcel at the rear corner of the farm property.",
        ],
        "summary_phrases": [
            "a withdrawn loner, no friends, isolated and lonely",
            "withdrawn loner with no friends, isolated, lonely",
            "the withdrawn loner had no friends and was isolated and lonely",
        ],
    },
    TopicId.DIVORCE: {
        "narrative_positive": [
            "The victim and the victim's spouse are in the process of getting a divorce.",
            "{kin} stated the victim had recently been served divorce papers by the spouse.",
            "{kin} said the victim was distraught over an impending divorce.",
            "The victim and spouse had separated and divorce proceedings were underway.",
        ],
        "narrative_decoy": [
            "Court records showed a divorce finalized more than twenty years earlier.",
            "An old divorce decree from decades ago was located among stored paperwork in the garage.",
            "A box of expired documents included a divorce certificate dated thirty years prior.",
        ],
        "summary_phrases": [
            "impending divorce, separation from spouse, filing",
            "an impending divorce and separation from the spouse, filing",
            "impending divorce with separation from spouse and filing",
        ],
    },
    TopicId.EVICTION_MOVE: {
        "narrative_positive": [
            "The day of the incident the victim was being evicted from their residence.",
            "The victim had received an eviction notice and was upset about having to move out.",
            "{kin} reported the victim had recently moved after losing the apartment.",
            "The victim faced eviction at the end of the month and told {kin_lower} there was nowhere to go.",
        ],
        "narrative_decoy": [
            "The family business had recently moved its office to a leased unit downtown.",
            "Maintenance crews had recently moved surplus farm equipment into the storage sheds.",
            "A tenant in the adjacent building had recently moved furniture using a rented truck.",
        ],
        "summary_phrases": [
            "eviction notice, apartment housing, moving",
            "an eviction notice for the apartment housing, moving out",
            "eviction notice at the apartment housing and moving",
        ],
    },
    TopicId.BREAK_UP: {
        "narrative_positive": [
            "Family members stated that the victim had been upset over the recent break up with his girlfriend.",
            "The victim's boyfriend had ended the relationship, and {kin_lower} described the recent breakup as devastating.",
            "{kin} said the victim had gone through a breakup with a longtime partner days earlier.",
            "Friends reported the victim was distraught after a recent break-up with a partner.",
        ],
        "narrative_decoy": [
            "Investigators noted the asphalt had started to break up near the end of the driveway.",
            "Radio traffic would break up repeatedly in that area according to dispatch logs.",
            "Ice on the pond had begun to break up along the shoreline during the thaw.",
        ],
        "summary_phrases": [
            "upset over recent breakup, girlfriend relationship ended",
            "upset after a recent breakup, the girlfriend relationship ended",
            "upset by recent breakup with girlfriend, relationship ended",
        ],
    },
    TopicId.CHILD_CUSTODY_LOSS: {
        "narrative_positive": [
            "She had lost custody of their children due to domestic violence issues with their former spouse.",
            "The victim had recently lost custody of his son after a lengthy court battle.",
            "{kin} reported the victim was devastated after losing custody of the children.",
            "The victim had lost custody of her daughter following a contested hearing.",
        ],
        "narrative_decoy": [
            "A television program about a celebrity custody battle was playing when officers arrived.",
            "Paperwork about an old custody battle from many years prior was located in storage.",
            "A magazine article describing a famous custody dispute lay open on the coffee table.",
        ],
        "summary_phrases": [
            "lost custody of children after court battle",
            "lost custody of the children in a court battle",
            "lost custody of their children during the court battle",
        ],
    },
    TopicId.PET_LOSS: {
        "narrative_positive": [
            "He also said the victim's dog died recently and she was very upset about that.",
            "The victim's cat had died the week before and the victim had been grieving the pet deeply.",
            "{kin} said the victim was devastated after having to put their dog down.",
            "The victim had been mourning since the family dog died earlier that month.",
        ],
        "narrative_decoy": [
            "A neighbor mentioned that a stray cat died on the adjoining property years earlier.",
            "The victim once volunteered at a shelter where an elderly dog had died of natural causes.",
            "A framed photo of a hunting dog hung in the den, and relatives said that dog died long ago.",
        ],
        "summary_phrases": [
            "grieving pet loss, dog died",
            "grieving over the pet loss after the dog died",
            "grieving a pet loss once the dog died",
        ],
    },
}

FILLER_NARRATIVE = [
    "The victim was found at the residence by a family member.",
    "No suicide note was located at the scene.",
    "Toxicology results were pending at the time of this report.",
    "The decedent had a documented history of depression.",
    "Officers responded to the address shortly after the call came in.",
    "The medical examiner determined the cause of death at autopsy.",
    "Family reported the victim had been having trouble sleeping.",
    "A firearm was recovered near the decedent.",
    "The victim had recently lost a job at a warehouse.",
    "EMS pronounced the victim deceased on arrival.",
    "The victim had complained of chronic back pain for months.",
    "Neighbors reported hearing nothing unusual the night before.",
    "The victim had been drinking earlier in the evening according to witnesses.",
    "Medical records indicated prior emergency department visits.",
    "The scene was secured pending the arrival of detectives.",
    "Bills and unopened mail were stacked on the kitchen counter.",
]

FILLER_SUMMARY = [
    "history of depression",
    "recent job stress reported",
    "financial problems mounting debt",
    "chronic pain complaints ongoing",
    "argument with family member",
    "alcohol involvement suspected intoxicated",
    "recent hospital discharge illness",
    "legal charges pending arrest",
    "gambling debts reported casino",
    "work conflict supervisor reprimand",
]
