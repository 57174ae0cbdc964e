#!/usr/bin/env python
# coding: utf-8

import re
from io import open
from setuptools import setup

# Parse the version from the package
with open('memat/__init__.py', encoding='utf-8') as initfile:
    version = re.search(
        r"^__version__ = '([^']+)'", initfile.read(), re.MULTILINE).group(1)

# acceptable version schema: major.minor[.patch][sub]
__version__ = version
__pkg__ = 'memat'
__pkgdir__ = {}
__pkgs__ = ['memat']
__provides__ = ['memat']
__desc__ = 'Membrane and atomic ensemble hybrid optomechanics'
__scripts__ = ['bin/memat']

# Prepare install requires and extra requires
install_requires = [
    'fmf>=0.9.2',
    'click',
    'PyYAML',
    'numpy',
    'scipy>=1.12',
]
extras_require = {
    'docs': ['sphinx', 'sphinx_rtd_theme'],
    'tests': ['pytest'],
}
extras_require['all'] = [dependency
    for extra in extras_require.values()
    for dependency in extra]

__deplinks__ = []

# README is in the parent directory
readme = 'README.rst'
with open(readme, encoding='utf-8') as _file:
    readme = _file.read()

default_setup = dict(
    license='MIT',
    long_description=readme,
    data_files=[],
    package_data={
        'memat': ['data/reference.json']},
    classifiers=[
        'License :: OSI Approved :: MIT License',
        'Natural Language :: English',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    keywords=['optomechanics', 'cold atoms', 'membrane', 'cooling'],
    dependency_links=__deplinks__,
    description=__desc__,
    install_requires=install_requires,
    extras_require=extras_require,
    name=__pkg__,
    package_dir=__pkgdir__,
    packages=__pkgs__,
    provides=__provides__,
    scripts=__scripts__,
    version=__version__,
    python_requires='>=3.8',
)

setup(**default_setup)
