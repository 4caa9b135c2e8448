// Generated by tools/gen_fermi_table.py; do not edit by hand.
// Piecewise Chebyshev coefficients on [BREAKS[k], BREAKS[k+1]].

pub(crate) const BREAKS: [f64; 15] = [-2.0, 0.0, 2.0, 4.0, 6.0, 8.0, 11.0, 14.0, 18.0, 24.0, 32.0, 42.0, 56.0, 74.0, 100.0];

pub(crate) const HALF: [[f64; 23]; 14] = [
    [
        0.38739038738690046,
        0.3120406702302372,
        0.059718173566564295,
        0.005928444727932263,
        0.0001184947257627246,
        -4.514670562500442e-05,
        -4.367544625021614e-06,
        2.8586279819969345e-07,
        8.199320678741859e-08,
        1.6488015038981796e-09,
        -1.1659505104343024e-09,
        -1.1422438738803324e-10,
        1.0860898420941297e-11,
        2.7935797992820228e-12,
        2.6228886178861633e-14,
        -4.771452417585776e-14,
        -4.2254331847954735e-15,
        5.397366518054914e-16,
        1.2120153799600578e-16,
        -4.1742307223243313e-19,
        -2.32238024754643e-18,
        -1.7899407030800196e-19,
        3.016829284265228e-20,
    ],
    [
        1.6855382731409891,
        1.0286746980062507,
        0.10939278919493169,
        0.0005859019061811581,
        -0.0005007984697936068,
        2.713799055859704e-05,
        3.898809957632584e-06,
        -6.215266931664022e-07,
        -1.1107666933446451e-08,
        1.0133066123204046e-08,
        -5.734111557247981e-10,
        -1.2193732415637038e-10,
        1.8864149922531047e-11,
        6.445413607825068e-13,
        -3.802189584447868e-13,
        1.8205286774448504e-14,
        5.443113360722885e-15,
        -7.639721664084594e-16,
        -4.009165906724163e-17,
        1.750101421321905e-17,
        -6.471572404075384e-19,
        -2.8109903273672e-19,
        3.602310459267914e-20,
    ],
    [
        4.577556099012892,
        1.8462962676455728,
        0.09004987184063058,
        -0.0023819503131030776,
        3.9830696434709134e-05,
        8.738667869404217e-06,
        -1.3650881979018683e-06,
        1.0241050656475965e-07,
        -1.494357916096714e-09,
        -7.263919959340081e-10,
        1.1081827425726166e-10,
        -7.934669628864255e-12,
        -2.031968254114296e-14,
        8.404466110126165e-14,
        -1.1541806482526763e-14,
        7.339372733937776e-16,
        2.0315540129657534e-17,
        -1.0922186632944482e-17,
        1.343744869320632e-18,
        -7.190705113945113e-20,
        -4.722530605799187e-21,
        1.503983471610241e-21,
        -1.663527175362329e-22,
    ],
    [
        8.911590680283082,
        2.468887998577612,
        0.06743739249302516,
        -0.0013699060378860157,
        5.5612248530749903e-05,
        -2.006583262586123e-06,
        3.7217895340006454e-09,
        8.865832577676112e-09,
        -1.078723218970451e-09,
        8.560685263377222e-11,
        -4.871758110958416e-12,
        1.4756062484105815e-13,
        8.067165171660396e-15,
        -1.843260231408137e-15,
        1.8965486503672367e-16,
        -1.376513389753775e-17,
        6.712551765696764e-19,
        -5.629068721007045e-21,
        -3.3079157323237726e-21,
        4.707186480328244e-22,
        -4.203956349850543e-23,
        2.6751779397352807e-24,
        -9.580480280012757e-26,
    ],
    [
        14.345636991304847,
        2.954967340527863,
        0.05514833818471142,
        -0.0007561644556573972,
        2.458211875151094e-05,
        -1.0059820197033563e-06,
        3.9892032069785166e-08,
        -1.1680166146568218e-09,
        -2.8851903882020647e-12,
        3.96965221826719e-12,
        -3.9827413140025757e-13,
        2.833882926523283e-14,
        -1.6518547495740423e-15,
        7.98522339242791e-17,
        -2.9185072017516568e-18,
        3.945579661899761e-20,
        5.875942946321968e-21,
        -7.767526749432861e-22,
        6.383857921427354e-23,
        -4.2025011305559515e-24,
        2.306373368011005e-25,
        -1.0084243375937523e-26,
        2.683465805249849e-28,
    ],
    [
        22.435838515255313,
        5.18716074146779,
        0.10480061113599036,
        -0.0014887039047639958,
        5.0509749076549026e-05,
        -2.3838018717877216e-06,
        1.303369261675212e-07,
        -7.3105577774608765e-09,
        3.80213771568653e-10,
        -1.601992618444894e-11,
        3.183608061716008e-13,
        3.2061418651676746e-14,
        -5.4657290216259606e-15,
        5.448736680678675e-16,
        -4.4392542168561924e-17,
        3.1918992926178902e-18,
        -2.0713540337018576e-19,
        1.2051851673299105e-20,
        -6.005179542075493e-22,
        2.1528250534206345e-23,
        5.162435411655403e-26,
        -1.1190786113281342e-25,
        1.4555695846087966e-26,
    ],
    [
        33.59983606210442,
        5.965061800800963,
        0.09061896573140166,
        -0.0009426187205914617,
        2.277369015716214e-05,
        -7.615645418504614e-07,
        3.080893887348971e-08,
        -1.4022889479865574e-09,
        6.763491287981237e-11,
        -3.272760005934325e-12,
        1.5100592348832092e-13,
        -6.272316013501717e-15,
        2.1067528263370134e-16,
        -3.548462978867569e-18,
        -2.3802155532958344e-19,
        3.408971881934308e-20,
        -2.7849430795107618e-21,
        1.8758326549540978e-22,
        -1.1358684236367029e-23,
        6.398784551253375e-25,
        -3.403406400166599e-26,
        1.714461979331601e-27,
        -8.103691657414712e-29,
    ],
    [
        48.51887336279433,
        9.007733842824228,
        0.14190473401101134,
        -0.0015137768315057003,
        3.694432257905547e-05,
        -1.2255624162551585e-06,
        4.852952826507119e-08,
        -2.1732180072724283e-09,
        1.0669158509848638e-10,
        -5.593053983743991e-12,
        3.044532816597977e-13,
        -1.6708523448806253e-14,
        8.978642611413478e-16,
        -4.5870229758469275e-17,
        2.149445632326496e-18,
        -8.674253814273816e-20,
        2.494889267422753e-21,
        9.277574289080557e-24,
        -9.080107807341434e-24,
        9.610516321582023e-25,
        -7.597366016513491e-26,
        5.2621427179659495e-27,
        -3.3599860187668023e-28,
    ],
    [
        72.87336584469527,
        15.487964060485801,
        0.27817333595372246,
        -0.003362927538120648,
        9.23132455794947e-05,
        -3.410888005061916e-06,
        1.4856319407584534e-07,
        -7.215222986944008e-09,
        3.7990820434625445e-10,
        -2.1348904794067225e-11,
        1.267625042124178e-12,
        -7.885812786271094e-14,
        5.089809927815336e-15,
        -3.3664229333794873e-16,
        2.248150739769862e-17,
        -1.4918096106760751e-18,
        9.676655711071813e-20,
        -6.0320434713223576e-21,
        3.5415187903937443e-22,
        -1.900295713397932e-23,
        8.75961257606999e-25,
        -2.8321928043202866e-26,
        -2.2186895354413614e-28,
    ],
    [
        112.05849790496531,
        23.855282143490324,
        0.4277248845937502,
        -0.005143496409216364,
        0.00013988816737402787,
        -5.098261471096122e-06,
        2.178834071027052e-07,
        -1.0316455413238057e-08,
        5.253477815692419e-10,
        -2.8276205610301674e-11,
        1.591235946535354e-12,
        -9.297175138088001e-14,
        5.614509492358989e-15,
        -3.4942069007747427e-16,
        2.2364071523480488e-17,
        -1.4689797563093978e-18,
        9.873930373104304e-20,
        -6.762139266963392e-21,
        4.689829762984526e-22,
        -3.268924159120813e-23,
        2.2702905255229616e-24,
        -1.5567263784159741e-25,
        1.0398257773758729e-26,
    ],
    [
        170.03707497930063,
        34.28823953092425,
        0.5808997331797624,
        -0.0065866810221384305,
        0.0001685622459796485,
        -5.768134028550148e-06,
        2.3092581058331034e-07,
        -1.0217095827103788e-08,
        4.848239259711633e-10,
        -2.4239237674888627e-11,
        1.2623332118013137e-12,
        -6.794963389500848e-14,
        3.760014210582045e-15,
        -2.1304435649283415e-16,
        1.2324766681843689e-17,
        -7.26452262484139e-19,
        4.356255666106169e-20,
        -2.6550370556822543e-21,
        1.6436941537055864e-22,
        -1.033286543969113e-23,
        6.594192141291867e-25,
        -4.270272265261477e-26,
        2.7913198467277273e-27,
    ],
    [
        259.14412627418506,
        55.245624500517586,
        0.9891154461432461,
        -0.011841685360619643,
        0.0003196390334571815,
        -1.1524161087719803e-05,
        4.855323521230524e-07,
        -2.257961848323407e-08,
        1.1247585543416906e-09,
        -5.895066143114163e-11,
        3.2136972227693657e-12,
        -1.807985014455609e-13,
        1.0438189963766754e-14,
        -6.158894889194811e-16,
        3.7022927992492025e-17,
        -2.2619398062849915e-18,
        1.4018808307102492e-19,
        -8.800511666576021e-21,
        5.589199230995986e-22,
        -3.5877197442098145e-23,
        2.3258562594550536e-24,
        -1.5218630998555205e-25,
        1.0001918646188162e-26,
    ],
    [
        395.74953640312134,
        81.81830236166655,
        1.4192045221205611,
        -0.016449355855630298,
        0.00042958170818316744,
        -1.4974865944051663e-05,
        6.096136147571956e-07,
        -2.7374519663199108e-08,
        1.3157901732034964e-09,
        -6.649810177618805e-11,
        3.493049643848458e-12,
        -1.8921186002092314e-13,
        1.0509778211532936e-14,
        -5.961170297868705e-16,
        3.4418139889244406e-17,
        -2.0178649059902145e-18,
        1.1989428737525998e-19,
        -7.208163431776355e-21,
        4.379394244126655e-22,
        -2.6860095582060555e-23,
        1.6615850345465946e-24,
        -1.0359312565568436e-25,
        6.47936063013664e-27,
    ],
    [
        613.0977886646093,
        136.71934235242554,
        2.5596080383281654,
        -0.03201714495561363,
        0.0009021412225038539,
        -3.3919797207191806e-05,
        1.4888877015667138e-06,
        -7.20641919685812e-08,
        3.732237304779321e-09,
        -2.0316139097413813e-10,
        1.1490047372333862e-11,
        -6.698575084981571e-13,
        4.002878508708834e-14,
        -2.4416226342889933e-15,
        1.5153786827395465e-16,
        -9.54610133105059e-18,
        6.091725492169522e-19,
        -3.9316583446110526e-20,
        2.56312041008604e-21,
        -1.6859829924995367e-22,
        1.1179882207658114e-23,
        -7.467606088125252e-25,
        4.9983619604360427e-26,
    ],
];

pub(crate) const MINUS_HALF: [[f64; 23]; 14] = [
    [
        0.3296022855438516,
        0.23976953037042212,
        0.035123230627228844,
        0.0008968361041649562,
        -0.0004474377403647339,
        -5.112170193684062e-05,
        4.029315885310321e-06,
        1.2888335634187421e-06,
        2.7236710514612893e-08,
        -2.305774517995513e-08,
        -2.4417165555543386e-09,
        2.612650287309192e-10,
        7.121996698239271e-11,
        6.034666283280476e-13,
        -1.4131077989398773e-12,
        -1.3094218468008812e-13,
        1.8327926335889483e-14,
        4.271677234006486e-15,
        -2.311982455370667e-17,
        -9.157816198065849e-17,
        -7.25791155572072e-18,
        1.3177892828064048e-18,
        2.712191404112558e-19,
    ],
    [
        1.030563832855659,
        0.4336113659922416,
        0.003778269698816588,
        -0.003959790787485134,
        0.00026285826172963925,
        4.659697086372062e-05,
        -8.521643856331117e-06,
        -1.88748627870389e-07,
        1.7972984799851548e-07,
        -1.102595693524577e-08,
        -2.665342219157343e-09,
        4.4226617925018994e-10,
        1.727891228280517e-11,
        -1.047341889055523e-11,
        5.20836902459994e-13,
        1.7271194589879293e-13,
        -2.532170077337674e-14,
        -1.467681644284167e-15,
        6.5335288007199e-16,
        -2.438190231104471e-17,
        -1.1685501197714784e-17,
        1.5029441992347466e-18,
        1.1859951170671066e-19,
    ],
    [
        1.8391948202954504,
        0.36050173018145387,
        -0.01420289470024437,
        0.00030224281893153357,
        8.880717837409543e-05,
        -1.640275254613951e-05,
        1.4204996800532715e-06,
        -2.1694171317088727e-08,
        -1.3247411853363673e-08,
        2.2155553404586986e-09,
        -1.7235592655152735e-10,
        -8.101446865343931e-13,
        2.2068052834862495e-12,
        -3.2247230554696207e-13,
        2.1644094853446646e-14,
        6.982759637873269e-16,
        -3.740233483666841e-16,
        4.8178679638531593e-17,
        -2.669002849408916e-18,
        -1.9613564219476843e-19,
        6.34651475073549e-20,
        -7.236343635731945e-21,
        3.174895133034348e-22,
    ],
    [
        2.46476831038053,
        0.2701944952650133,
        -0.008239376394164525,
        0.00044492529291268514,
        -1.9940166848430504e-05,
        2.7304666685921095e-08,
        1.2566577743072654e-07,
        -1.7356807722086647e-08,
        1.544121343260981e-09,
        -9.723621855943244e-11,
        3.1979958530808693e-12,
        1.9894365973587072e-13,
        -4.833789342241023e-14,
        5.331695616021233e-15,
        -4.131274057986667e-16,
        2.1359394992970194e-17,
        -1.733888725341565e-19,
        -1.2077065725941791e-19,
        1.7999463979856475e-20,
        -1.6856908964211687e-21,
        1.1215540343128762e-22,
        -4.109280747270513e-24,
        -1.901982844835507e-25,
    ],
    [
        2.9526938091107158,
        0.22079048833907436,
        -0.00454706283429475,
        0.00019713560022867005,
        -1.007610035036727e-05,
        4.786502165825409e-07,
        -1.6280153333707675e-08,
        -5.416825488109201e-11,
        7.207927148783076e-11,
        -8.005208669858976e-12,
        6.25531559021343e-13,
        -3.97260418538258e-14,
        2.0773151862206756e-15,
        -8.15278640487853e-17,
        1.1571041894187308e-18,
        1.9033760026108761e-19,
        -2.65697091511977e-20,
        2.307425978784656e-21,
        -1.6011820312609761e-22,
        9.23712707440425e-24,
        -4.231602377936362e-25,
        1.1634810276908578e-26,
        3.614043751641278e-28,
    ],
    [
        3.455121772950943,
        0.27973872844622866,
        -0.00597077605516653,
        0.000270432083587691,
        -1.596043611054593e-05,
        1.046755179429559e-06,
        -6.84236319611194e-08,
        4.059770089389488e-09,
        -1.9175937148454614e-10,
        4.156525990522289e-12,
        4.797427288411308e-13,
        -8.828475843238725e-14,
        9.508588616538561e-15,
        -8.330940863718795e-16,
        6.411170336219058e-17,
        -4.433299225390139e-18,
        2.7371750983277723e-19,
        -1.4410620159509854e-20,
        5.422052380005415e-22,
        1.810741373356136e-24,
        -3.1771068507746544e-24,
        4.340575160340904e-25,
        -4.316632094837899e-26,
    ],
    [
        3.9748200846472885,
        0.24177228215954277,
        -0.0037755651067068728,
        0.00012170687580503532,
        -5.09022434102581e-06,
        2.471949668372506e-07,
        -1.3127395356067908e-08,
        7.234558493329436e-10,
        -3.936517486003903e-11,
        2.016778614945081e-12,
        -9.205478882713678e-14,
        3.366301767468991e-15,
        -6.08206291115989e-17,
        -4.502754670230383e-18,
        6.860625221056312e-19,
        -5.968563741149188e-20,
        4.268145718769561e-21,
        -2.735183819289677e-22,
        1.6258367540278855e-23,
        -9.099602562446397e-25,
        4.811334461667087e-26,
        -2.3852179429224975e-27,
        1.0819411841470315e-28,
    ],
    [
        4.501593184627291,
        0.2839575373460965,
        -0.004547473569646305,
        0.00014806932407383043,
        -6.143075129203925e-06,
        2.9203375760853475e-07,
        -1.5263047928132578e-08,
        8.565880181076149e-10,
        -5.052187722558163e-11,
        3.0553373197237855e-12,
        -1.8439137188571129e-13,
        1.0804503125808163e-14,
        -5.976139488425175e-16,
        3.013199211198846e-17,
        -1.3009619824169536e-18,
        3.975325941751233e-20,
        1.7608972411873734e-22,
        -1.649688612517219e-22,
        1.837096120434389e-23,
        -1.5269207190890031e-24,
        1.1098018393532871e-25,
        -7.447341002652262e-27,
        4.720333411691275e-28,
    ],
    [
        5.1592860575772805,
        0.37114454621395376,
        -0.006737258502640096,
        0.00024676494232380873,
        -1.1403426398799715e-05,
        5.962874451561855e-07,
        -3.3799715259994014e-08,
        2.0346688528041146e-09,
        -1.2867465425530588e-10,
        8.491762957424196e-12,
        -5.812254909025067e-13,
        4.092934326300858e-14,
        -2.932553242626512e-15,
        2.1086384048589428e-16,
        -1.498670036429018e-17,
        1.0364381073738004e-18,
        -6.860425752942816e-20,
        4.261498192807103e-21,
        -2.410981877764442e-22,
        1.1675644358504512e-23,
        -3.9406441059091415e-25,
        -3.834700928612089e-27,
        2.388910196061913e-27,
    ],
    [
        5.959956522621154,
        0.4280053166881007,
        -0.007728026502852784,
        0.0002804320943505143,
        -1.2781889028238827e-05,
        6.557596024585249e-07,
        -3.6235350498521776e-08,
        2.1093811504092575e-09,
        -1.2775655218857643e-10,
        7.990024132289684e-12,
        -5.1362694221889e-13,
        3.384439961291319e-14,
        -2.2823096240498836e-15,
        1.5734265875925627e-16,
        -1.1075138546300531e-17,
        7.941580948928522e-19,
        -5.779037398004793e-20,
        4.2436650445080356e-21,
        -3.1219021085915533e-22,
        2.2818257817544973e-23,
        -1.6424156035783127e-24,
        1.153495338269123e-25,
        -7.7962742656278e-27,
    ],
    [
        6.853690115089824,
        0.4649900419158267,
        -0.007915582190052879,
        0.00027025537201685087,
        -1.1564963486762412e-05,
        5.557784494132666e-07,
        -2.8695429662116845e-08,
        1.556504013321821e-09,
        -8.756134622623756e-11,
        5.067450214098589e-12,
        -3.0009059663851715e-13,
        1.811736689333471e-14,
        -1.1122075004798314e-15,
        6.92986825408946e-17,
        -4.376846717093694e-18,
        2.7998912256993947e-19,
        -1.8133142188859666e-20,
        1.1887599391446282e-21,
        -7.889021022002455e-23,
        5.3001484718680586e-24,
        -3.6043280751068773e-25,
        2.4793707953556353e-26,
        -1.714401366921115e-27,
    ],
    [
        7.887148809291487,
        0.5655749630413613,
        -0.01016652442205134,
        0.00036613667379218576,
        -1.6508398663073912e-05,
        8.349212696926083e-07,
        -4.531139490276498e-08,
        2.580094624518541e-09,
        -1.52157936296835e-10,
        9.21792888039068e-12,
        -5.705211881850839e-13,
        3.593681533534941e-14,
        -2.297326499035443e-15,
        1.48735459577681e-16,
        -9.736968763084747e-18,
        6.437476077129092e-19,
        -4.2941021863354455e-20,
        2.8877993882237738e-21,
        -1.956794828414386e-22,
        1.33540694127934e-23,
        -9.175536822091114e-25,
        6.345948767115577e-26,
        -4.395859349169807e-27,
    ],
    [
        9.08543102528308,
        0.631140230959316,
        -0.010982918693071294,
        0.00038266557239993243,
        -1.6681455984428237e-05,
        8.151651260058574e-07,
        -4.271604659305602e-08,
        2.346972996263373e-09,
        -1.3346045030185218e-10,
        7.790466123823625e-12,
        -4.64246749476062e-13,
        2.8133581938161722e-14,
        -1.7288694249165152e-15,
        1.0750670740722674e-16,
        -6.753561087778133e-18,
        4.2804997402191917e-19,
        -2.734473447741857e-20,
        1.759174465439262e-21,
        -1.1389484626315078e-22,
        7.416767783971688e-24,
        -4.855537343563219e-25,
        3.194430725887291e-26,
        -2.10203618873173e-27,
    ],
    [
        10.50947083171442,
        0.7881282468993596,
        -0.014803313867395917,
        0.0005565427983855699,
        -2.6170041728088526e-05,
        1.3789691524290747e-06,
        -7.789003024867484e-08,
        4.611274059800343e-09,
        -2.8243889789509073e-10,
        1.775122314887095e-11,
        -1.1385103924379227e-12,
        7.422719143423973e-14,
        -4.9053780564261205e-15,
        3.278958888458743e-16,
        -2.213278784813333e-17,
        1.506634101972048e-18,
        -1.033232380165836e-19,
        7.132442361088667e-21,
        -4.952505421381334e-22,
        3.4570456198239203e-23,
        -2.4247437999955507e-24,
        1.7081094973503973e-25,
        -1.2020746631495636e-26,
    ],
];

