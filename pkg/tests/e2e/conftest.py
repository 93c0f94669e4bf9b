import os

import pytest


@pytest.fixture(scope='module', autouse=True)
def init():
    os.environ['POWERTOOLS_SERVICE_NAME'] = 'wavelab'
    os.environ['LOG_LEVEL'] = 'DEBUG'
