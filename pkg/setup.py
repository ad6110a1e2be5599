import os
from setuptools import setup, find_packages


cwd = os.path.dirname(os.path.abspath(__file__))

with open(os.path.join(cwd, 'requirements.txt')) as f:
    reqs = [line for line in f.read().splitlines() if line and not line.startswith('#')]

setup(
    name='primexp',
    version='0.1.0',
    packages=find_packages(exclude=['test', 'test.*', 'examples', 'examples.*']),
    include_package_data=True,
    install_requires=reqs,
    python_requires='>=3.9',
    package_data={
        'primexp': ['configs/*.json'],
    },
    entry_points={
        "console_scripts": [
            "primexp = primexp.main:main",
        ],
    },
)
