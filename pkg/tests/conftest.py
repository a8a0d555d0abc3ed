import json
import os

import pytest
from hypothesis import settings

# Law suites opt in with @settings(settings.get_profile('laws'))
settings.register_profile('laws', max_examples=1000, deadline=None)
settings.register_profile('dev', max_examples=50, deadline=None)
settings.register_profile('ci', max_examples=200, deadline=None)
settings.load_profile(os.environ.get('HYPOTHESIS_PROFILE', 'dev'))


@pytest.fixture
def write_scenario(tmp_path):
    """Write a scenario dict to a temporary JSON file and return its path"""
    def write(data, name='scenario.json'):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path
    return write


@pytest.fixture
def empty_scenario_data():
    return {'schema': 1, 'id': 'empty', 'grid': {'width': 10, 'height': 10, 'cell_size_m': 1.0},
            'start': [0, 0], 'goal': [9, 9]}


@pytest.fixture
def walled_goal_data():
    """Goal vertex in a closed ring of obstacle cells"""
    return {'schema': 1, 'id': 'walled', 'grid': {'width': 10, 'height': 10},
            'obstacles': {'rectangles': [[3, 3, 4, 1], [3, 6, 4, 1], [3, 4, 1, 2], [6, 4, 1, 2]]},
            'start': [0, 0], 'goal': [5, 5]}
