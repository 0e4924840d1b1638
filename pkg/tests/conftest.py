import pytest

from evofda import synth

# sample project data: one project, seven releases
SAMPLE_HISTORY_CSV = """project_id,release_date,loc,cplxlcoh
3064,2003-01-17,4901,45.71
3064,2003-03-02,5449,79.31
3064,2003-07-16,6775,113.83
3064,2003-08-16,10915,135.98
3064,2003-10-25,13516,149.15
3064,2004-01-04,13991,148.65
3064,2004-02-07,14892,162.30
"""

SAMPLE_HISTORY_DAYS = (0, 44, 180, 211, 281, 352, 386)


@pytest.fixture
def sample_history_csv():
    return SAMPLE_HISTORY_CSV


@pytest.fixture(scope="session")
def corpus():
    """The default 4 x 15 synthetic corpus, seed 7."""
    projects, labels = synth.generate_corpus(synth.CorpusSpec(seed=7))
    return projects, labels


@pytest.fixture(scope="session")
def truth(corpus):
    projects, labels = corpus
    return {p.project_id: lab for p, lab in zip(projects, labels)}


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
