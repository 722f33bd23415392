from setuptools import setup, find_packages
import re

# Try to get version from __init__.py if it exists
version = '0.1.0'  # Default version
try:
    with open('cavityantenna/__init__.py', 'r') as f:
        version_match = re.search(r"^__version__ = ['\"]([^'\"]*)['\"]", f.read(), re.M)
        if version_match:
            version = version_match.group(1)
except FileNotFoundError:
    pass

# Read long description from README
with open('README.md', 'r', encoding='utf-8') as f:
    long_description = f.read()

# Runtime requirements live in requirements.txt
with open('requirements.txt', 'r', encoding='utf-8') as f:
    install_requires = [line.strip() for line in f if line.strip() and not line.startswith('#')]

setup(
    name='cavityantenna',
    version=version,
    description='Dipole emission, collection factor and optimization of planar Fabry-Perot antennas '
                'for color centers in diamond membranes',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=find_packages(exclude=['tests', 'examples']),
    package_data={'cavityantenna': ['templates/*.j2']},
    include_package_data=True,
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: Scientific/Engineering :: Physics',
        'Operating System :: OS Independent',
    ],
    keywords='transfer matrix, thin film optics, dipole emission, microcavity, color center, '
             'particle swarm optimization',
    python_requires='>=3.9',
    install_requires=install_requires,
    extras_require={
        'dev': [
            'pytest>=6.0.0',
            'pytest-cov>=3.0.0',
            'black>=21.5b2',
            'flake8>=3.9.2',
            'isort>=5.9.1',
        ],
    },
    entry_points={
        'console_scripts': [
            'cavityantenna=cavityantenna.cli:main',
        ],
    },
)
