from setuptools import setup, find_packages

version = '0.1.0'

setup(
    name='dnfcg',
    version=version,
    description='Interpretable DNF rule classifiers for short technical messages, learned by column generation',
    license='BSD',
    packages=find_packages(exclude=['tests']),
    include_package_data=True,
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Programming Language :: Python :: 3',
    ],
    install_requires=[
        'numpy',
        'scipy',
        'pandas',
        'scikit-learn',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': [
            'dnfcg=dnfcg.cli:main',
        ],
    },
)
