/// `sqrt(2) * erfinv(i / 100)` for `i = 1..=99`, computed at 40 digits with
/// mpmath; equal to the two-sided critical value at level `i / 100`.
pub const TWO_SIDED: [f64; 99] = [
    0.012533469508069263161,
    0.025068908258711035762,
    0.037608287661255899666,
    0.050153583464733616021,
    0.062706777943213784067,
    0.075269862099829829785,
    0.087844837895871732239,
    0.10043372051146979314,
    0.11303854064456513599,
    0.12566134685507403421,
    0.13830420796140451595,
    0.15096921549677725887,
    0.16365848623314126389,
    0.1763741647808613218,
    0.18911842627279249011,
    0.20189347914185085095,
    0.21470156800174449471,
    0.22754497664114940981,
    0.24042603114230794684,
    0.2533471031357997988,
    0.26631061320409498117,
    0.27931903444745416532,
    0.29237489622680419251,
    0.30548078809939733937,
    0.31863936396437516302,
    0.33185334643681657823,
    0.3451255314704723318,
    0.35845879325119373847,
    0.37185608938507465959,
    0.38532046640756762381,
    0.39885506564233673171,
    0.4124631294414047958,
    0.4261480078412781764,
    0.43991316567323380775,
    0.45376219016987942578,
    0.46769879911450821441,
    0.48172684958473026523,
    0.49585034734745332657,
    0.51007345696859477078,
    0.52440051270804078404,
    0.53883603027845021876,
    0.55338471955567281931,
    0.56805149833898276644,
    0.58284150727121621869,
    0.59776012604247845565,
    0.61281299101662722558,
    0.62800601443756960204,
    0.64334540539291696475,
    0.65883769273618775612,
    0.6744897501960817432,
    0.69030882393303397022,
    0.70630256284008745588,
    0.72247905192806255471,
    0.73884684918521362932,
    0.75541502636046926379,
    0.77219321418868469869,
    0.78919165265822230658,
    0.80642124701824020849,
    0.82389363033855733498,
    0.84162123357291420518,
    0.85961736424191155033,
    0.87789629505122859538,
    0.89647336400191616758,
    0.91536508784281404979,
    0.93458929107348013882,
    0.95416525314619440915,
    0.97411387705930926174,
    0.99445788320975316774,
    1.0152220332170279713,
    1.0364333894937895797,
    1.0581216176847768411,
    1.0803193408149561185,
    1.1030625561995975391,
    1.1263911290388005892,
    1.1503493803760081783,
    1.1749867920660900059,
    1.2003588580308590588,
    1.2265281200366100804,
    1.2535654384704506491,
    1.281551565544600467,
    1.3105791121681287297,
    1.3407550336902163796,
    1.3722038089987259373,
    1.405071560309632556,
    1.4395314709384559153,
    1.4757910281791707352,
    1.5141018876192837364,
    1.5547735945968535411,
    1.5981931399228175585,
    1.6448536269514727149,
    1.6953977102721363147,
    1.7506860712521699794,
    1.8119106729525977149,
    1.8807936081512509389,
    1.9599639845400542355,
    2.0537489106318230529,
    2.1700903775845605297,
    2.3263478740408411009,
    2.575829303548900761
];
